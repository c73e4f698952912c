#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "decumulate/errors.hpp"
#include "decumulate/market_data.hpp"
#include "decumulate/parallel.hpp"

using namespace decumulate;

namespace {

std::filesystem::path write_text(const std::string& name, const std::string& text) {
    const auto file = std::filesystem::temp_directory_path() / ("decumulate_series_" + name);
    std::ofstream(file) << text;
    return file;
}

std::string month(std::size_t k) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04zu-%02zu", 1926 + k / 12, k % 12 + 1);
    return buf;
}

// Correlated AR(1) monthly log returns so that both serial and cross dependence are present.
ReturnSeries synthetic_series(std::size_t months, double rho, double phi) {
    ReturnSeries s;
    Stream rng(99, 0);
    double xs = 0.0;
    double xb = 0.0;
    for (std::size_t k = 0; k < months; ++k) {
        const auto [z1, z2] = rng.normal_pair();
        const double e2 = rho * z1 + std::sqrt(1.0 - rho * rho) * z2;
        xs = phi * xs + z1;
        xb = phi * xb + e2;
        s.dates.push_back(month(k));
        s.stock_gross.push_back(std::exp(0.005 + 0.04 * xs));
        s.bond_gross.push_back(std::exp(0.002 + 0.015 * xb));
    }
    return s;
}

double mean(const std::vector<double>& x) { return std::accumulate(x.begin(), x.end(), 0.0) / x.size(); }

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
    const double ma = mean(a);
    const double mb = mean(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        sab += (a[k] - ma) * (b[k] - mb);
        saa += (a[k] - ma) * (a[k] - ma);
        sbb += (b[k] - mb) * (b[k] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

struct BatchStat {
    double mean = 0.0;
    double se = 0.0;
};

// Mean and standard error over independent groups of paths.
template <class F>
BatchStat batch_means(std::size_t groups, F&& per_group) {
    std::vector<double> v(groups);
    for (std::size_t g = 0; g < groups; ++g) v[g] = per_group(g);
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return {m, std::sqrt(ss / (groups - 1.0) / groups)};
}

}  // namespace

TEST(LoadSeries, ParsesGrossFile) {
    const auto f = write_text("gross.csv",
                              "date,stock_gross,bond_gross\n1926-01,1.01,1.002\n1926-02,0.97,1.004\n"
                              "1926-03,1.03,0.999\n");
    const auto s = load_series(f);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s.dates[1], "1926-02");
    EXPECT_EQ(s.stock_gross[1], 0.97);
    EXPECT_EQ(s.bond_gross[2], 0.999);
    std::filesystem::remove(f);
}

TEST(LoadSeries, RejectsZeroGrossWithRowIndex) {
    const auto f = write_text("zero.csv", "date,stock_gross,bond_gross\n1926-01,1.01,1.0\n1926-02,0,1.0\n");
    try {
        load_series(f);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
    }
    std::filesystem::remove(f);
}

TEST(LoadSeries, ConvertsNetReturns) {
    const auto f = write_text("net.csv", "date,stock_return,bond_return\n1926-01,0.01,-0.02\n");
    const auto s = load_series(f);
    EXPECT_DOUBLE_EQ(s.stock_gross[0], 1.01);
    EXPECT_DOUBLE_EQ(s.bond_gross[0], 0.98);
    std::filesystem::remove(f);
}

TEST(LoadSeries, RejectsMalformedInput) {
    const auto unsorted = write_text("unsorted.csv", "date,stock_gross,bond_gross\n1926-02,1,1\n1926-01,1,1\n");
    EXPECT_THROW(load_series(unsorted), DataError);
    const auto fields = write_text("fields.csv", "date,stock_gross,bond_gross\n1926-01,1\n");
    EXPECT_THROW(load_series(fields), DataError);
    const auto number = write_text("number.csv", "date,stock_gross,bond_gross\n1926-01,abc,1\n");
    EXPECT_THROW(load_series(number), DataError);
    const auto header = write_text("header.csv", "month,a,b\n1926-01,1,1\n");
    EXPECT_THROW(load_series(header), DataError);
    EXPECT_THROW(load_series("/nonexistent/series.csv"), DataError);
    for (const auto& f : {unsorted, fields, number, header}) std::filesystem::remove(f);
}

TEST(LoadSeries, WriteReadRoundTrip) {
    const auto s = synthetic_series(40, 0.2, 0.1);
    const auto f = std::filesystem::temp_directory_path() / "decumulate_series_rt.csv";
    write_series(s, f);
    const auto t = load_series(f);
    EXPECT_EQ(s.dates, t.dates);
    EXPECT_EQ(s.stock_gross, t.stock_gross);
    EXPECT_EQ(s.bond_gross, t.bond_gross);
    std::filesystem::remove(f);
}

TEST(BlockLength, MeanMatchesGeometric) {
    Stream rng(7, 0);
    const std::size_t n = 100000;
    const double expected = 3.0;
    const double v = 1.0 / expected;
    double sum = 0.0;
    std::size_t ones = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto b = sample_block_length(rng, expected);
        ASSERT_GE(b, 1u);
        sum += static_cast<double>(b);
        ones += b == 1;
    }
    const double se = std::sqrt((1.0 - v) / (v * v) / n);
    EXPECT_NEAR(sum / n, expected, 3.0 * se);
    const double se_p = std::sqrt(v * (1.0 - v) / n);
    EXPECT_NEAR(static_cast<double>(ones) / n, v, 3.0 * se_p);
}

TEST(BlockLength, UnitExpectationIsAlwaysOne) {
    Stream rng(7, 1);
    for (int k = 0; k < 1000; ++k) EXPECT_EQ(sample_block_length(rng, 1.0), 1u);
}

TEST(Bootstrap, UnitBlocksRemoveSerialCorrelation) {
    const auto series = synthetic_series(1128, 0.3, 0.9);
    BootstrapConfig c{.expected_block_months = 1.0, .n_paths = 1000, .seed = 5};
    std::vector<double> a, b;
    for (std::size_t j = 0; j < c.n_paths; ++j) {
        const auto idx = bootstrap_month_indices(series.size(), c, j);
        for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
            a.push_back(std::log(series.stock_gross[idx[k]]));
            b.push_back(std::log(series.stock_gross[idx[k + 1]]));
        }
    }
    const double r = correlation(a, b);
    EXPECT_NEAR(r, 0.0, 3.0 / std::sqrt(static_cast<double>(a.size())));
    // The source itself is strongly autocorrelated, so the test has power.
    std::vector<double> sa(series.stock_gross.begin(), series.stock_gross.end() - 1);
    std::vector<double> sb(series.stock_gross.begin() + 1, series.stock_gross.end());
    EXPECT_GT(correlation(sa, sb), 0.5);
}

TEST(Bootstrap, ConstantSeriesGivesConstantAnnualReturns) {
    ReturnSeries s;
    for (std::size_t k = 0; k < 24; ++k) {
        s.dates.push_back(month(k));
        s.stock_gross.push_back(1.01);
        s.bond_gross.push_back(1.01);
    }
    for (double block : {1.0, 3.0, 12.0}) {
        const auto p = stationary_block_bootstrap(s, {.expected_block_months = block, .n_paths = 50, .seed = 3});
        EXPECT_EQ(p.source(), PathSource::bootstrap);
        double expected = 1.0;
        for (int k = 0; k < 12; ++k) expected *= 1.01;
        for (double r : p.raw()) EXPECT_DOUBLE_EQ(r, expected);
    }
}

TEST(Bootstrap, IndicesAreCircularRuns) {
    BootstrapConfig c{.expected_block_months = 6.0, .n_paths = 1, .seed = 11};
    const auto idx = bootstrap_month_indices(20, c, 0);
    ASSERT_EQ(idx.size(), 360u);
    std::size_t wraps = 0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        EXPECT_LT(idx[k], 20u);
        if (k > 0 && idx[k - 1] == 19 && idx[k] == 0) ++wraps;
    }
    EXPECT_GT(wraps, 0u);
}

TEST(Bootstrap, CompoundsGroupsOfTwelve) {
    const auto series = synthetic_series(120, 0.2, 0.0);
    BootstrapConfig c{.expected_block_months = 3.0, .n_paths = 4, .seed = 21};
    const auto p = stationary_block_bootstrap(series, c);
    ASSERT_EQ(p.n_paths(), 4u);
    ASSERT_EQ(p.n_periods(), 30u);
    for (std::size_t j = 0; j < 4; ++j) {
        const auto idx = bootstrap_month_indices(series.size(), c, j);
        for (std::size_t i = 0; i < 30; ++i) {
            double rs = 1.0, rb = 1.0;
            for (std::size_t k = 0; k < 12; ++k) {
                rs *= series.stock_gross[idx[12 * i + k]];
                rb *= series.bond_gross[idx[12 * i + k]];
            }
            EXPECT_EQ(p.gross(j, i, 0), rs);
            EXPECT_EQ(p.gross(j, i, 1), rb);
        }
    }
}

TEST(Bootstrap, PairedSamplingPreservesCrossCorrelation) {
    const auto series = synthetic_series(1128, 0.3, 0.2);
    std::vector<double> ls, lb;
    for (std::size_t k = 0; k < series.size(); ++k) {
        ls.push_back(std::log(series.stock_gross[k]));
        lb.push_back(std::log(series.bond_gross[k]));
    }
    const double source_corr = correlation(ls, lb);
    const double source_mean = mean(ls);
    BootstrapConfig c{.expected_block_months = 3.0, .n_paths = 3000, .seed = 8};
    const std::size_t groups = 100;
    const std::size_t per_group = c.n_paths / groups;
    std::vector<std::vector<double>> rs(groups), rb(groups);
    for (std::size_t j = 0; j < c.n_paths; ++j) {
        for (std::size_t k : bootstrap_month_indices(series.size(), c, j)) {
            rs[j / per_group].push_back(ls[k]);
            rb[j / per_group].push_back(lb[k]);
        }
    }
    const auto corr = batch_means(groups, [&](std::size_t g) { return correlation(rs[g], rb[g]); });
    EXPECT_NEAR(corr.mean, source_corr, 3.0 * corr.se);
    const auto m = batch_means(groups, [&](std::size_t g) { return mean(rs[g]); });
    EXPECT_NEAR(m.mean, source_mean, 3.0 * m.se);
}

TEST(Bootstrap, DeterministicAcrossThreadCounts) {
    const auto series = synthetic_series(200, 0.2, 0.3);
    BootstrapConfig c{.expected_block_months = 3.0, .n_paths = 2500, .seed = 13};
    const std::size_t saved = thread_count();
    set_thread_count(1);
    const auto a = stationary_block_bootstrap(series, c);
    set_thread_count(3);
    const auto b = stationary_block_bootstrap(series, c);
    set_thread_count(saved);
    EXPECT_EQ(a, b);
    c.seed = 14;
    EXPECT_NE(a, stationary_block_bootstrap(series, c));
}

TEST(Bootstrap, RejectsShortSeriesAndBadConfig) {
    const auto series = synthetic_series(11, 0.0, 0.0);
    EXPECT_THROW(stationary_block_bootstrap(series, {.n_paths = 1}), DataError);
    const auto ok = synthetic_series(24, 0.0, 0.0);
    EXPECT_THROW(stationary_block_bootstrap(ok, {.expected_block_months = 0.5, .n_paths = 1}),
                 std::invalid_argument);
}
