#pragma once

// Shared file plumbing: digests, little-endian binary fields, JSON mappings of
// the configuration structs.

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "decumulate/market.hpp"
#include "decumulate/scenario.hpp"

namespace decumulate {

using Json = nlohmann::json;

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& file);

std::string read_text_file(const std::filesystem::path& file);
void write_text_file(const std::filesystem::path& file, std::string_view text);

namespace le {
void put_u32(std::ostream& out, std::uint32_t v);
void put_u64(std::ostream& out, std::uint64_t v);
void put_f64(std::ostream& out, double v);
void put_f64s(std::ostream& out, std::span<const double> v);
std::uint32_t get_u32(std::istream& in);
std::uint64_t get_u64(std::istream& in);
double get_f64(std::istream& in);
void get_f64s(std::istream& in, std::span<double> v);
}  // namespace le

void to_json(Json& j, const AssetJumpParams& p);
void from_json(const Json& j, AssetJumpParams& p);
void to_json(Json& j, const MarketParams& m);
void from_json(const Json& j, MarketParams& m);
void to_json(Json& j, const ScenarioConfig& s);
/// Missing keys keep their current (default) values.
void from_json(const Json& j, ScenarioConfig& s);

}  // namespace decumulate
