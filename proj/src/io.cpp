#include "decumulate/io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "decumulate/errors.hpp"

namespace decumulate {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

std::string to_hex(const unsigned char* bytes, unsigned int n) {
    std::ostringstream out;
    out << std::hex << std::setfill('0');
    for (unsigned int i = 0; i < n; ++i) out << std::setw(2) << static_cast<int>(bytes[i]);
    return out.str();
}

struct DigestContext {
    DigestContext() : ctx(EVP_MD_CTX_new()) {
        if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1)
            throw std::runtime_error("sha256: cannot initialise digest");
    }
    ~DigestContext() { EVP_MD_CTX_free(ctx); }
    DigestContext(const DigestContext&) = delete;
    DigestContext& operator=(const DigestContext&) = delete;

    void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx, data, n); }
    std::string finish() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
        unsigned int len = 0;
        EVP_DigestFinal_ex(ctx, md.data(), &len);
        return to_hex(md.data(), len);
    }

    EVP_MD_CTX* ctx;
};

template <typename T>
void put_raw(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get_raw(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw DataError("binary file truncated");
    return v;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
    DigestContext d;
    d.update(bytes.data(), bytes.size());
    return d.finish();
}

std::string sha256_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot open " + file.string());
    DigestContext d;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        d.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return d.finish();
}

std::string read_text_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot open " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& file, std::string_view text) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + file.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

namespace le {
void put_u32(std::ostream& out, std::uint32_t v) { put_raw(out, v); }
void put_u64(std::ostream& out, std::uint64_t v) { put_raw(out, v); }
void put_f64(std::ostream& out, double v) { put_raw(out, v); }
void put_f64s(std::ostream& out, std::span<const double> v) {
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
}
std::uint32_t get_u32(std::istream& in) { return get_raw<std::uint32_t>(in); }
std::uint64_t get_u64(std::istream& in) { return get_raw<std::uint64_t>(in); }
double get_f64(std::istream& in) { return get_raw<double>(in); }
void get_f64s(std::istream& in, std::span<double> v) {
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
    if (!in) throw DataError("binary file truncated");
}
}  // namespace le

void to_json(Json& j, const AssetJumpParams& p) {
    j = Json{{"mu", p.mu}, {"sigma", p.sigma}, {"lambda", p.lambda},
             {"u_up", p.u_up}, {"eta1", p.eta1}, {"eta2", p.eta2}};
}

void from_json(const Json& j, AssetJumpParams& p) {
    j.at("mu").get_to(p.mu);
    j.at("sigma").get_to(p.sigma);
    j.at("lambda").get_to(p.lambda);
    j.at("u_up").get_to(p.u_up);
    j.at("eta1").get_to(p.eta1);
    j.at("eta2").get_to(p.eta2);
}

void to_json(Json& j, const MarketParams& m) {
    j = Json{{"stock", m.stock}, {"bond", m.bond}, {"rho_sb", m.rho_sb}, {"borrow_spread", m.borrow_spread}};
}

void from_json(const Json& j, MarketParams& m) {
    j.at("stock").get_to(m.stock);
    j.at("bond").get_to(m.bond);
    j.at("rho_sb").get_to(m.rho_sb);
    m.borrow_spread = j.value("borrow_spread", 0.0);
}

void to_json(Json& j, const ScenarioConfig& s) {
    j = Json{{"T", s.T},         {"M", s.M},         {"W0", s.W0},
             {"q_min", s.q_min}, {"q_max", s.q_max}, {"kappa", s.kappa},
             {"alpha", s.alpha}, {"epsilon", s.epsilon}, {"es_only", s.es_only}};
}

void from_json(const Json& j, ScenarioConfig& s) {
    s.T = j.value("T", s.T);
    s.M = j.value("M", s.M);
    s.W0 = j.value("W0", s.W0);
    s.q_min = j.value("q_min", s.q_min);
    s.q_max = j.value("q_max", s.q_max);
    s.kappa = j.value("kappa", s.kappa);
    s.alpha = j.value("alpha", s.alpha);
    s.epsilon = j.value("epsilon", s.epsilon);
    s.es_only = j.value("es_only", s.es_only);
}

}  // namespace decumulate
