// tariff.hpp
//
// Grid tariff ingestion and CES trading-price derivation.
//
// Three energy-trading schemes are supported:
//   AvgPrice     lambda_C(t) = daily mean of lambda_G  (flat within a day)
//   Scaled(d>1)  lambda_C(t) = d * lambda_G(t)         (premium scheme)
//   Scaled(d<1)  lambda_C(t) = d * lambda_G(t)         (discount scheme)
// The buyback is one-for-one: a single lambda_C series prices prosumer
// purchases from and sales to the CES alike.

#pragma once

#include <string>
#include <vector>

namespace cesplan::tariff {

enum class EtsKind { AvgPrice, Scaled };

struct Scheme {
    EtsKind kind = EtsKind::AvgPrice;
    double delta = 1.0;  // only meaningful for Scaled

    static Scheme avg() { return {EtsKind::AvgPrice, 1.0}; }
    static Scheme scaled(double d) { return {EtsKind::Scaled, d}; }

    std::string label() const;
};

struct TariffSchedule {
    std::vector<double> lambda_g;  // AUD/kWh, one entry per hour of the horizon
    std::vector<double> lambda_c;  // AUD/kWh, same length
    Scheme scheme;
    double lambda_g_avg = 0.0;     // mean of lambda_g over the whole horizon
};

// Derive the CES price series for one scheme.  The horizon must be a
// positive multiple of 24; AvgPrice averages each day separately.  Scaled
// requires delta > 0 and delta != 1 (a unit scale makes CES trades
// indistinguishable from grid trades and is rejected).
TariffSchedule derive_ces_price(const std::vector<double>& lambda_g, Scheme scheme);

// Load `t,lambda_g_aud_per_kwh` rows; t must cover [0, horizon) exactly.
std::vector<double> load_tariff_csv(const std::string& path);

// Parse a CLI scheme spec: "avg", "scaled:1.5".
Scheme parse_scheme(const std::string& text);

}  // namespace cesplan::tariff
