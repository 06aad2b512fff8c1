#include "cesplan/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "cesplan/csv.hpp"
#include "cesplan/errors.hpp"

namespace cesplan::scenario {

DiscretePdf discretize_normal(double mu, double sigma) {
    DiscretePdf pdf;
    if (sigma <= 0.0) {
        pdf.realizations = {mu};
        pdf.probs = {1.0};
        pdf.degenerate = true;
        return pdf;
    }
    // Density at mu + k*sigma is exp(-k^2/2) / (sigma*sqrt(2*pi)); scaling
    // by sigma and renormalizing cancels every mu/sigma dependence.
    static const double w1 = std::exp(-0.5);
    static const double w2 = std::exp(-2.0);
    static const double w3 = std::exp(-4.5);
    const double total = 1.0 + 2.0 * (w1 + w2 + w3);
    pdf.realizations = {mu,
                        mu + sigma, mu - sigma,
                        mu + 2.0 * sigma, mu - 2.0 * sigma,
                        mu + 3.0 * sigma, mu - 3.0 * sigma};
    pdf.probs = {1.0 / total,
                 w1 / total, w1 / total,
                 w2 / total, w2 / total,
                 w3 / total, w3 / total};
    return pdf;
}

RouletteWheel make_wheel(const DiscretePdf& pdf) {
    RouletteWheel wheel;
    wheel.cumulative.resize(pdf.probs.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < pdf.probs.size(); ++i) {
        acc += pdf.probs[i];
        wheel.cumulative[i] = acc;
    }
    wheel.cumulative.back() = 1.0;  // absorb rounding so the last bin closes at 1
    return wheel;
}

std::size_t RouletteWheel::spin(double r) const {
    if (!(r >= 0.0 && r < 1.0))
        throw DomainError("roulette draw must lie in [0,1), got " + csv::format_double(r));
    // Bins are half-open [prev, cumulative[i]); pick the first bin whose
    // upper edge exceeds r.
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
    if (it == cumulative.end()) --it;  // r < 1 == back() guards this, but stay safe
    return static_cast<std::size_t>(it - cumulative.begin());
}

InitialScenarioSet generate_initial(const ProsumerTraceSet& traces, const CaseConfig& cfg,
                                    std::uint64_t stream_tag) {
    const int M = cfg.n_initial_scenarios;
    const int U = traces.n_prosumers();
    const int T = traces.horizon_hours;
    InitialScenarioSet set;
    set.n_scenarios = M;
    set.n_prosumers = U;
    set.horizon = T;
    set.e_load = Grid3(M, U, T);
    set.e_reactive = Grid3(M, U, T);
    set.e_pv = Grid3(M, U, T);
    set.phi_load = Grid3(M, U, T);
    set.phi_reactive = Grid3(M, U, T);
    set.phi_pv = Grid3(M, U, T);
    set.omega = Grid2(M, T);

    const Grid2* mus[3] = {&traces.mu_load, &traces.mu_reactive, &traces.mu_pv};
    Grid3* values[3] = {&set.e_load, &set.e_reactive, &set.e_pv};
    Grid3* phis[3] = {&set.phi_load, &set.phi_reactive, &set.phi_pv};

    for (int u = 0; u < U; ++u) {
        for (int t = 0; t < T; ++t) {
            for (int q = 0; q < 3; ++q) {
                const double mu = (*mus[q])(u, t);
                const DiscretePdf pdf = discretize_normal(mu, cfg.sigma_fraction * std::fabs(mu));
                const RouletteWheel wheel = make_wheel(pdf);
                for (int m = 0; m < M; ++m) {
                    const double r = rng::uniform_at(
                        cfg.rng_seed, {stream_tag, static_cast<std::uint64_t>(q),
                                       static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(u),
                                       static_cast<std::uint64_t>(t)});
                    const std::size_t idx = wheel.spin(r);
                    (*values[q])(m, u, t) = pdf.realizations[idx];
                    (*phis[q])(m, u, t) = pdf.probs[idx];
                }
            }
        }
    }

    // Interval probability of scenario m: product over prosumers of the
    // three realization probabilities, normalized over scenarios.  With
    // ~3*U factors per interval the product underflows quickly, so it is
    // accumulated in log space and shifted by the per-interval maximum
    // before exponentiation.
    for (int t = 0; t < T; ++t) {
        std::vector<double> logw(M, 0.0);
        double max_logw = -std::numeric_limits<double>::infinity();
        for (int m = 0; m < M; ++m) {
            double acc = 0.0;
            for (int u = 0; u < U; ++u)
                acc += std::log(set.phi_load(m, u, t)) + std::log(set.phi_reactive(m, u, t)) +
                       std::log(set.phi_pv(m, u, t));
            logw[m] = acc;
            max_logw = std::max(max_logw, acc);
        }
        double total = 0.0;
        for (int m = 0; m < M; ++m) total += std::exp(logw[m] - max_logw);
        for (int m = 0; m < M; ++m) set.omega(m, t) = std::exp(logw[m] - max_logw) / total;
    }
    return set;
}

namespace {

// Feature matrix: one row per scenario, columns are all (u,t) cells of
// load, reactive, pv concatenated, standardized per column.  Columns with
// zero spread contribute nothing to distances.
struct Features {
    int n = 0, d = 0;
    std::vector<double> x;  // row-major [n][d]

    double* row(int i) { return x.data() + static_cast<std::size_t>(i) * d; }
    const double* row(int i) const { return x.data() + static_cast<std::size_t>(i) * d; }
};

Features build_features(const InitialScenarioSet& init) {
    const int M = init.n_scenarios;
    const int cells = init.n_prosumers * init.horizon;
    Features ft;
    ft.n = M;
    ft.d = 3 * cells;
    ft.x.resize(static_cast<std::size_t>(M) * ft.d);
    const Grid3* src[3] = {&init.e_load, &init.e_reactive, &init.e_pv};
    for (int q = 0; q < 3; ++q) {
        const std::vector<double>& flat = src[q]->flat();
        for (int c = 0; c < cells; ++c) {
            double mean = 0.0;
            for (int m = 0; m < M; ++m) mean += flat[static_cast<std::size_t>(m) * cells + c];
            mean /= M;
            double var = 0.0;
            for (int m = 0; m < M; ++m) {
                const double dlt = flat[static_cast<std::size_t>(m) * cells + c] - mean;
                var += dlt * dlt;
            }
            const double sd = std::sqrt(var / M);
            const int col = q * cells + c;
            for (int m = 0; m < M; ++m) {
                const double raw = flat[static_cast<std::size_t>(m) * cells + c];
                ft.x[static_cast<std::size_t>(m) * ft.d + col] = sd > 0.0 ? (raw - mean) / sd : 0.0;
            }
        }
    }
    return ft;
}

double sq_dist(const double* a, const double* b, int d) {
    double acc = 0.0;
    for (int i = 0; i < d; ++i) {
        const double dlt = a[i] - b[i];
        acc += dlt * dlt;
    }
    return acc;
}

// k-means++ initial centers; returns chosen point indices.  Throws when
// fewer than k distinct points exist (every remaining squared distance is
// zero before k centers are placed).
std::vector<int> seed_centers(const Features& ft, int k, rng::Substream& rs) {
    std::vector<int> centers;
    centers.reserve(k);
    centers.push_back(static_cast<int>(rs.next_unit() * ft.n) % ft.n);
    std::vector<double> d2(ft.n);
    for (int i = 0; i < ft.n; ++i) d2[i] = sq_dist(ft.row(i), ft.row(centers[0]), ft.d);
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (double v : d2) total += v;
        if (total <= 0.0)
            throw DomainError("scenario reduction needs at least " + std::to_string(k) +
                              " distinct scenarios, fewer were sampled");
        const double r = rs.next_unit() * total;
        double acc = 0.0;
        int pick = ft.n - 1;
        for (int i = 0; i < ft.n; ++i) {
            acc += d2[i];
            if (r < acc) {
                pick = i;
                break;
            }
        }
        centers.push_back(pick);
        for (int i = 0; i < ft.n; ++i) d2[i] = std::min(d2[i], sq_dist(ft.row(i), ft.row(pick), ft.d));
    }
    return centers;
}

}  // namespace

ScenarioSet reduce_kmeans(const InitialScenarioSet& init, const CaseConfig& cfg) {
    const int M = init.n_scenarios;
    const int K = cfg.n_reduced_scenarios;
    const int U = init.n_prosumers;
    const int T = init.horizon;
    if (K > M) throw DomainError("n_reduced_scenarios exceeds the sampled scenario count");

    const Features ft = build_features(init);
    rng::Substream rs(rng::combine(cfg.rng_seed, {rng::kStreamKmeans}));

    std::vector<double> centers(static_cast<std::size_t>(K) * ft.d);
    {
        const std::vector<int> seeds = seed_centers(ft, K, rs);
        for (int k = 0; k < K; ++k)
            std::copy_n(ft.row(seeds[k]), ft.d, centers.data() + static_cast<std::size_t>(k) * ft.d);
    }

    std::vector<int> assign(M, -1), prev(M, -2);
    std::vector<int> count(K, 0);
    for (int iter = 0; iter < 300; ++iter) {
        // Assignment step; ties break toward the lower cluster index.
        for (int m = 0; m < M; ++m) {
            int best = 0;
            double best_d = sq_dist(ft.row(m), centers.data(), ft.d);
            for (int k = 1; k < K; ++k) {
                const double d = sq_dist(ft.row(m), centers.data() + static_cast<std::size_t>(k) * ft.d, ft.d);
                if (d < best_d) {
                    best_d = d;
                    best = k;
                }
            }
            assign[m] = best;
        }
        // Deterministic fix for empty clusters: move in the point farthest
        // from its current center (lowest index on ties).
        std::fill(count.begin(), count.end(), 0);
        for (int m = 0; m < M; ++m) ++count[assign[m]];
        for (int k = 0; k < K; ++k) {
            if (count[k] > 0) continue;
            int far = -1;
            double far_d = -1.0;
            for (int m = 0; m < M; ++m) {
                if (count[assign[m]] <= 1) continue;  // do not empty another cluster
                const double d =
                    sq_dist(ft.row(m), centers.data() + static_cast<std::size_t>(assign[m]) * ft.d, ft.d);
                if (d > far_d) {
                    far_d = d;
                    far = m;
                }
            }
            if (far < 0) throw DomainError("scenario reduction failed: cannot repopulate empty cluster");
            --count[assign[far]];
            assign[far] = k;
            ++count[k];
            std::copy_n(ft.row(far), ft.d, centers.data() + static_cast<std::size_t>(k) * ft.d);
        }
        if (assign == prev) break;
        prev = assign;
        // Update step: centers become member means (standardized space).
        std::fill(centers.begin(), centers.end(), 0.0);
        for (int m = 0; m < M; ++m) {
            double* c = centers.data() + static_cast<std::size_t>(assign[m]) * ft.d;
            const double* r = ft.row(m);
            for (int i = 0; i < ft.d; ++i) c[i] += r[i];
        }
        for (int k = 0; k < K; ++k) {
            double* c = centers.data() + static_cast<std::size_t>(k) * ft.d;
            for (int i = 0; i < ft.d; ++i) c[i] /= count[k];
        }
    }

    // Outputs use plain means of the raw member values, which equal the
    // de-standardized centroids because standardization is affine.
    ScenarioSet out;
    out.n_scenarios = K;
    out.n_prosumers = U;
    out.horizon = T;
    out.delta_t = cfg.delta_t_hours;
    out.e_load = Grid3(K, U, T);
    out.e_reactive = Grid3(K, U, T);
    out.e_pv = Grid3(K, U, T);
    out.omega = Grid2(K, T);

    std::fill(count.begin(), count.end(), 0);
    for (int m = 0; m < M; ++m) ++count[assign[m]];
    for (int m = 0; m < M; ++m) {
        const int k = assign[m];
        for (int u = 0; u < U; ++u)
            for (int t = 0; t < T; ++t) {
                out.e_load(k, u, t) += init.e_load(m, u, t);
                out.e_reactive(k, u, t) += init.e_reactive(m, u, t);
                out.e_pv(k, u, t) += init.e_pv(m, u, t);
            }
        for (int t = 0; t < T; ++t) out.omega(k, t) += init.omega(m, t);
    }
    for (int k = 0; k < K; ++k)
        for (int u = 0; u < U; ++u)
            for (int t = 0; t < T; ++t) {
                out.e_load(k, u, t) /= count[k];
                out.e_reactive(k, u, t) /= count[k];
                out.e_pv(k, u, t) /= count[k];
            }
    // Cluster masses already sum to 1 per interval (clusters partition the
    // sampled set); renormalize anyway to absorb the last bits of rounding.
    for (int t = 0; t < T; ++t) {
        double total = 0.0;
        for (int k = 0; k < K; ++k) total += out.omega(k, t);
        for (int k = 0; k < K; ++k) out.omega(k, t) /= total;
    }
    return out;
}

ScenarioSet single_scenario(const InitialScenarioSet& init, int m, double delta_t) {
    if (m < 0 || m >= init.n_scenarios) throw DomainError("scenario index out of range");
    ScenarioSet out;
    out.n_scenarios = 1;
    out.n_prosumers = init.n_prosumers;
    out.horizon = init.horizon;
    out.delta_t = delta_t;
    out.e_load = Grid3(1, init.n_prosumers, init.horizon);
    out.e_reactive = Grid3(1, init.n_prosumers, init.horizon);
    out.e_pv = Grid3(1, init.n_prosumers, init.horizon);
    out.omega = Grid2(1, init.horizon, 1.0);
    for (int u = 0; u < init.n_prosumers; ++u)
        for (int t = 0; t < init.horizon; ++t) {
            out.e_load(0, u, t) = init.e_load(m, u, t);
            out.e_reactive(0, u, t) = init.e_reactive(m, u, t);
            out.e_pv(0, u, t) = init.e_pv(m, u, t);
        }
    return out;
}

void write_scenarios_csv(const ScenarioSet& set, const std::vector<std::string>& prosumer_ids,
                         const std::string& path) {
    std::ofstream out = csv::open_out(path);
    out << "s,t,u,load_kwh,reactive_kvarh,pv_kwh\n";
    for (int s = 0; s < set.n_scenarios; ++s)
        for (int t = 0; t < set.horizon; ++t)
            for (int u = 0; u < set.n_prosumers; ++u)
                out << s << ',' << t << ',' << prosumer_ids[u] << ','
                    << csv::format_double(set.e_load(s, u, t)) << ','
                    << csv::format_double(set.e_reactive(s, u, t)) << ','
                    << csv::format_double(set.e_pv(s, u, t)) << '\n';
    if (!out) throw Error("write failed: " + path);
}

void write_omega_csv(const ScenarioSet& set, const std::string& path) {
    std::ofstream out = csv::open_out(path);
    out << "s,t,omega\n";
    for (int s = 0; s < set.n_scenarios; ++s)
        for (int t = 0; t < set.horizon; ++t)
            out << s << ',' << t << ',' << csv::format_double(set.omega(s, t)) << '\n';
    if (!out) throw Error("write failed: " + path);
}

}  // namespace cesplan::scenario
