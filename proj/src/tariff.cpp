#include "cesplan/tariff.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "cesplan/csv.hpp"
#include "cesplan/errors.hpp"

namespace cesplan::tariff {

std::string Scheme::label() const {
    if (kind == EtsKind::AvgPrice) return "avg";
    return "scaled:" + csv::format_double(delta);
}

TariffSchedule derive_ces_price(const std::vector<double>& lambda_g, Scheme scheme) {
    const int T = static_cast<int>(lambda_g.size());
    if (T == 0 || T % 24 != 0)
        throw ValidationError("tariff horizon must be a positive multiple of 24, got " +
                              std::to_string(T));
    if (scheme.kind == EtsKind::Scaled) {
        if (scheme.delta <= 0.0)
            throw DomainError("price scale must be positive, got " + csv::format_double(scheme.delta));
        if (scheme.delta == 1.0)
            throw DomainError("price scale 1 makes CES trades identical to grid trades; "
                              "use the avg scheme or a scale != 1");
    }

    TariffSchedule ts;
    ts.lambda_g = lambda_g;
    ts.scheme = scheme;
    ts.lambda_g_avg = std::accumulate(lambda_g.begin(), lambda_g.end(), 0.0) / T;
    ts.lambda_c.resize(T);

    if (scheme.kind == EtsKind::AvgPrice) {
        for (int day = 0; day < T / 24; ++day) {
            double sum = 0.0;
            for (int h = 0; h < 24; ++h) sum += lambda_g[day * 24 + h];
            const double mean = sum / 24.0;
            for (int h = 0; h < 24; ++h) ts.lambda_c[day * 24 + h] = mean;
        }
    } else {
        for (int t = 0; t < T; ++t) ts.lambda_c[t] = scheme.delta * lambda_g[t];
    }
    return ts;
}

std::vector<double> load_tariff_csv(const std::string& path) {
    csv::Reader rd(path);
    std::vector<std::string> f;
    std::vector<std::pair<int, double>> rows;
    bool header_seen = false;
    int max_t = -1;
    while (rd.next(f)) {
        if (!header_seen) {
            header_seen = true;
            if (f.size() >= 1 && f[0] == "t") {
                if (f.size() != 2 || f[1] != "lambda_g_aud_per_kwh")
                    rd.fail("expected header t,lambda_g_aud_per_kwh");
                continue;
            }
            rd.fail("missing header row (expected t,lambda_g_aud_per_kwh)");
        }
        if (f.size() != 2) rd.fail("expected 2 fields");
        int t = static_cast<int>(rd.to_int(f[0], "t"));
        double v = rd.to_double(f[1], "lambda_g_aud_per_kwh");
        if (t < 0) rd.fail("t must be non-negative");
        max_t = std::max(max_t, t);
        rows.emplace_back(t, v);
    }
    if (rows.empty()) throw ValidationError(path + ": no tariff rows");
    std::vector<double> lambda(max_t + 1, std::nan(""));
    for (auto [t, v] : rows) {
        if (!std::isnan(lambda[t]))
            throw ValidationError(path + ": duplicate tariff entry for t=" + std::to_string(t));
        lambda[t] = v;
    }
    for (int t = 0; t <= max_t; ++t)
        if (std::isnan(lambda[t]))
            throw ValidationError(path + ": missing tariff entry for t=" + std::to_string(t));
    return lambda;
}

Scheme parse_scheme(const std::string& text) {
    if (text == "avg") return Scheme::avg();
    const std::string prefix = "scaled:";
    if (text.rfind(prefix, 0) == 0) {
        const std::string num = text.substr(prefix.size());
        double d = 0.0;
        auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), d);
        if (ec != std::errc() || p != num.data() + num.size())
            throw ParseError("bad price scale in scheme spec '" + text + "'");
        return Scheme::scaled(d);
    }
    throw ParseError("unknown scheme '" + text + "' (expected 'avg' or 'scaled:<delta>')");
}

}  // namespace cesplan::tariff
