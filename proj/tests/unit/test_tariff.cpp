#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include "cesplan/errors.hpp"
#include "cesplan/tariff.hpp"
#include "doctest.h"

using namespace cesplan;
using tariff::Scheme;

namespace {

std::vector<double> two_level_day(double low, double high) {
    std::vector<double> v(24, low);
    for (int t = 17; t < 21; ++t) v[t] = high;
    return v;
}

std::string temp_file(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("average-price scheme is flat at each day's mean") {
    std::vector<double> lg = two_level_day(0.2, 0.8);
    // Day mean by direct summation.
    const double mean = std::accumulate(lg.begin(), lg.end(), 0.0) / 24.0;

    tariff::TariffSchedule ts = tariff::derive_ces_price(lg, Scheme::avg());
    REQUIRE(ts.lambda_c.size() == 24);
    for (double v : ts.lambda_c) CHECK(v == doctest::Approx(mean).epsilon(1e-15));
    CHECK(ts.lambda_g_avg == doctest::Approx(mean).epsilon(1e-15));
    CHECK(ts.scheme.label() == "avg");
}

TEST_CASE("average-price scheme averages each day separately") {
    std::vector<double> lg(48);
    for (int t = 0; t < 24; ++t) lg[t] = 0.1;
    for (int t = 24; t < 48; ++t) lg[t] = 0.5;
    tariff::TariffSchedule ts = tariff::derive_ces_price(lg, Scheme::avg());
    for (int t = 0; t < 24; ++t) CHECK(ts.lambda_c[t] == doctest::Approx(0.1));
    for (int t = 24; t < 48; ++t) CHECK(ts.lambda_c[t] == doctest::Approx(0.5));
    CHECK(ts.lambda_g_avg == doctest::Approx(0.3));
}

TEST_CASE("scaled scheme multiplies every interval") {
    std::vector<double> lg = two_level_day(0.2, 0.8);
    for (double d : {1.5, 0.5}) {
        tariff::TariffSchedule ts = tariff::derive_ces_price(lg, Scheme::scaled(d));
        for (int t = 0; t < 24; ++t)
            CHECK(ts.lambda_c[t] == doctest::Approx(d * lg[t]).epsilon(1e-15));
    }
    CHECK(Scheme::scaled(1.5).label() == "scaled:1.5");
    CHECK(Scheme::scaled(0.5).label() == "scaled:0.5");
}

TEST_CASE("price derivation rejects bad horizons and scales") {
    std::vector<double> lg = two_level_day(0.2, 0.8);
    CHECK_THROWS_AS(tariff::derive_ces_price({}, Scheme::avg()), ValidationError);
    CHECK_THROWS_AS(tariff::derive_ces_price(std::vector<double>(23, 0.1), Scheme::avg()),
                    ValidationError);
    CHECK_THROWS_AS(tariff::derive_ces_price(lg, Scheme::scaled(0.0)), DomainError);
    CHECK_THROWS_AS(tariff::derive_ces_price(lg, Scheme::scaled(-2.0)), DomainError);
    // A unit scale makes CES prices indistinguishable from grid prices.
    CHECK_THROWS_AS(tariff::derive_ces_price(lg, Scheme::scaled(1.0)), DomainError);
}

TEST_CASE("scheme specs parse round-trip") {
    CHECK(tariff::parse_scheme("avg").kind == tariff::EtsKind::AvgPrice);
    Scheme s = tariff::parse_scheme("scaled:1.5");
    CHECK(s.kind == tariff::EtsKind::Scaled);
    CHECK(s.delta == doctest::Approx(1.5));
    CHECK(tariff::parse_scheme(Scheme::scaled(0.75).label()).delta == doctest::Approx(0.75));
    CHECK_THROWS_AS(tariff::parse_scheme("premium"), ParseError);
    CHECK_THROWS_AS(tariff::parse_scheme("scaled:abc"), ParseError);
    CHECK_THROWS_AS(tariff::parse_scheme(""), ParseError);
}

TEST_CASE("tariff CSV loader covers the horizon exactly") {
    const std::string p = temp_file("cesplan_tariff.csv");
    {
        std::ofstream f(p);
        f << "t,lambda_g_aud_per_kwh\n";
        // Deliberately shuffled order.
        for (int t = 23; t >= 0; --t) f << t << ',' << (0.1 + 0.01 * t) << '\n';
    }
    std::vector<double> lam = tariff::load_tariff_csv(p);
    REQUIRE(lam.size() == 24);
    for (int t = 0; t < 24; ++t) CHECK(lam[t] == doctest::Approx(0.1 + 0.01 * t));

    std::ofstream(p) << "t,lambda_g_aud_per_kwh\n0,0.1\n0,0.2\n";
    CHECK_THROWS_AS(tariff::load_tariff_csv(p), ValidationError);
    std::ofstream(p) << "t,lambda_g_aud_per_kwh\n0,0.1\n2,0.2\n";
    CHECK_THROWS_AS(tariff::load_tariff_csv(p), ValidationError);
    std::ofstream(p) << "hour,price\n0,0.1\n";
    CHECK_THROWS_AS(tariff::load_tariff_csv(p), ParseError);
}
