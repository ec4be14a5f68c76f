// Acceptance checks. One PASS/FAIL line per criterion, with the measured values.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "swarmguide/async.hpp"
#include "swarmguide/guidance.hpp"
#include "swarmguide/policies.hpp"
#include "swarmguide/scenario.hpp"
#include "swarmguide/sim.hpp"
#include "swarmguide/topology.hpp"

using namespace swarmguide;

namespace {

int failures = 0;

void report(int id, const char* title, bool pass, const std::string& detail, double seconds) {
    std::printf("%s  %2d %-28s %s [%.1fs]\n", pass ? "PASS" : "FAIL", id, title, detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++failures;
}

void info(const std::string& line) {
    std::printf("      %s\n", line.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
    char buf[1024];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

constexpr double kInf = std::numeric_limits<double>::infinity();

// Random connected graph: random tree plus a few extra edges.
BinTopology random_graph(int n, std::mt19937_64& rng) {
    std::vector<Edge> edges;
    for (int v = 1; v < n; ++v) edges.emplace_back(std::uniform_int_distribution<int>(0, v - 1)(rng), v);
    const int extra = std::uniform_int_distribution<int>(0, n)(rng);
    std::uniform_int_distribution<int> node(0, n - 1);
    for (int e = 0; e < extra; ++e) {
        const int a = node(rng), b = node(rng);
        if (a == b) continue;
        if (std::find_if(edges.begin(), edges.end(), [&](const Edge& x) {
                return (x.first == a && x.second == b) || (x.first == b && x.second == a);
            }) != edges.end())
            continue;
        edges.emplace_back(a, b);
    }
    return BinTopology::from_edges(n, edges);
}

BinTopology random_topology(std::mt19937_64& rng) {
    if (std::uniform_int_distribution<int>(0, 3)(rng) == 0) return random_graph(std::uniform_int_distribution<int>(2, 30)(rng), rng);
    int rows = std::uniform_int_distribution<int>(1, 8)(rng);
    int cols = std::uniform_int_distribution<int>(1, 8)(rng);
    if (rows * cols < 2) cols = 2;
    return build_grid(rows, cols, std::uniform_int_distribution<int>(1, 3)(rng));
}

std::vector<int> random_counts(int n, std::mt19937_64& rng) {
    const int agents = std::uniform_int_distribution<int>(1, 5000)(rng);
    const int hot = std::uniform_int_distribution<int>(1, n)(rng);
    std::vector<int> bins(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) bins[static_cast<std::size_t>(i)] = i;
    std::shuffle(bins.begin(), bins.end(), rng);
    std::vector<int> counts(static_cast<std::size_t>(n), 0);
    std::uniform_int_distribution<int> pick(0, hot - 1);
    for (int a = 0; a < agents; ++a) ++counts[static_cast<std::size_t>(bins[static_cast<std::size_t>(pick(rng))])];
    return counts;
}

// 1 - P[i,i] <= max over N(i) of the gains: what the max coupling actually guarantees.
bool neighbourhood_bound(const Eigen::MatrixXd& p, const BinTopology& topo, std::span<const double> xi) {
    for (int i = 0; i < topo.n_bins(); ++i) {
        double m = 0.0;
        for (int l : topo.neighbors(i)) m = std::max(m, xi[static_cast<std::size_t>(l)]);
        if (1.0 - p(i, i) > m + kStochasticTolerance) return false;
    }
    return true;
}

struct PolicyTally {
    const char* name;
    int instances = 0;
    int r1_to_r4 = 0;
    int r5 = 0;
    int neighbourhood = 0;
    double worst_r5 = 0.0;
    double worst_balance = 0.0;
    double worst_stationarity = 0.0;
    int async_checked = 0;
    int async_ok = 0;
    double worst_async = 0.0;
};

double stationarity_error(const Eigen::MatrixXd& p, const DesiredDistribution& theta) {
    const Eigen::Map<const Eigen::RowVectorXd> th(theta.values().data(), p.rows());
    return (th * p - th).cwiseAbs().maxCoeff();
}

// Criteria 1 and 2 share the instances.
void requirement_suite() {
    Timer timer;
    std::mt19937_64 rng(20240601);
    PolicyTally tallies[] = {{"p1"}, {"p1-boosted"}, {"p2"}, {"gica-baseline"}};
    const int n_instances = 1200;
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    for (int inst = 0; inst < n_instances; ++inst) {
        const auto topo = random_topology(rng);
        const int n = topo.n_bins();
        const auto theta = unif(rng) < 0.2 ? DesiredDistribution::uniform(n) : DesiredDistribution::random(n, rng);
        GuidanceConfig cfg;
        cfg.alpha = 0.1 + 1.9 * unif(rng);
        cfg.eps_m = 0.05 + 0.95 * unif(rng);
        cfg.expense_slope = 2.0 * unif(rng);
        cfg.expense_offset = unif(rng);
        const auto counts = random_counts(n, rng);
        const auto field = local_field(counts, topo, theta);

        std::vector<double> xi(static_cast<std::size_t>(n));
        const bool derived = unif(rng) < 0.5;
        for (int i = 0; i < n; ++i) {
            const auto s = static_cast<std::size_t>(i);
            if (derived) xi[s] = primary_gain(field.density[s], field.target[s], cfg);
            else xi[s] = unif(rng) < 0.2 ? cfg.eps_xi : std::max(cfg.eps_xi, unif(rng));
        }

        const auto expense = ExpenseModel::from_config(topo, cfg);
        const ThetaBoost plain(topo, theta, false);
        const ThetaBoost boosted(topo, theta, true);
        const ExpenseKernel k_plain{topo, theta, expense, plain, cfg.eps_m};
        const ExpenseKernel k_boost{topo, theta, expense, boosted, cfg.eps_m};

        Eigen::MatrixXd caps = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            for (int l : topo.neighbors(i)) {
                if (l != i) caps(i, l) = 1.0 + 60.0 * unif(rng);
            }
        }

        const int total = std::accumulate(counts.begin(), counts.end(), 0);
        std::vector<double> mu(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) mu[static_cast<std::size_t>(i)] = static_cast<double>(counts[static_cast<std::size_t>(i)]) / total;
        const auto g_gains = global_gains(mu, theta, cfg);

        struct Built {
            Eigen::MatrixXd p;
            std::vector<double> xi;
        };
        const Built built[] = {
            {k_plain.matrix(xi), xi},
            {k_boost.matrix(xi), xi},
            {p2_matrix(counts, xi, theta, topo, caps, cfg).p, xi},
            {gica_matrix(mu, k_boost, cfg), g_gains},
        };

        const auto mask = ReadinessMask::random_blocked(n, 0.5 * unif(rng), rng);
        for (std::size_t k = 0; k < 4; ++k) {
            auto& t = tallies[k];
            const auto rep = validate_requirements(built[k].p, theta, topo, built[k].xi);
            ++t.instances;
            t.r1_to_r4 += rep.r1_to_r4() ? 1 : 0;
            t.r5 += rep.r5_settling_bound ? 1 : 0;
            t.neighbourhood += neighbourhood_bound(built[k].p, topo, built[k].xi) ? 1 : 0;
            t.worst_r5 = std::max(t.worst_r5, rep.max_r5_excess);
            t.worst_balance = std::max(t.worst_balance, rep.max_balance_error);
            t.worst_stationarity = std::max(t.worst_stationarity, stationarity_error(built[k].p, theta));

            const auto pbar = async_primary_matrix(built[k].p, mask, topo);
            const auto arep = verify_async_properties(pbar, theta, topo, mask);
            ++t.async_checked;
            t.async_ok += (arep.stationarity_properties() && arep.no_cross_boundary_flow) ? 1 : 0;
            t.worst_async = std::max(t.worst_async, arep.max_stationarity_error);
        }
    }
    const double secs = timer.seconds();

    bool r14 = true, r5 = true, stat = true;
    for (const auto& t : tallies) {
        r14 = r14 && t.r1_to_r4 == t.instances;
        r5 = r5 && t.r5 == t.instances;
        stat = stat && t.worst_stationarity <= 1e-12 && t.async_ok == t.async_checked;
    }
    report(1, "requirement suite", r14 && r5 && secs < 60.0,
           fmt("%d instances x 4 constructors; R1-R4 %s; R5 %s", n_instances, r14 ? "all pass" : "VIOLATED",
               r5 ? "all pass" : "VIOLATED"),
           secs);
    for (const auto& t : tallies) {
        info(fmt("%-14s R1-R4 %d/%d  R5 %d/%d (worst excess %.3g)  1-P[i,i] <= max_N(i) gain %d/%d", t.name, t.r1_to_r4,
                 t.instances, t.r5, t.instances, t.worst_r5, t.neighbourhood, t.instances));
    }
    if (!r5) {
        info("R5 fails where a neighbour's gain exceeds the row's own: the max coupling lets");
        info("off-diagonal mass reach max_{N(i)} gain, which the last column shows is respected.");
    }

    report(2, "stationarity", stat && secs < 60.0,
           fmt("max |theta P - theta| = %.3g, async masks %d/%d keep all properties",
               std::max({tallies[0].worst_stationarity, tallies[1].worst_stationarity, tallies[2].worst_stationarity,
                         tallies[3].worst_stationarity}),
               tallies[0].async_ok + tallies[1].async_ok + tallies[2].async_ok + tallies[3].async_ok,
               tallies[0].async_checked * 4),
           secs);
    for (const auto& t : tallies) {
        info(fmt("%-14s max balance error %.3g, stationarity %.3g, async stationarity %.3g", t.name, t.worst_balance,
                 t.worst_stationarity, t.worst_async));
    }
}

void b_matrix_ranks() {
    Timer timer;
    std::mt19937_64 rng(77);
    int checked = 0, good = 0;
    auto check = [&](const BinTopology& topo, const DesiredDistribution& theta) {
        ++checked;
        good += b_matrix_rank(topo, theta) == topo.n_bins() - 1 ? 1 : 0;
    };
    const std::vector<Edge> star{{0, 1}, {1, 2}, {1, 3}};
    std::vector<Edge> loop = star;
    loop.emplace_back(0, 3);
    check(BinTopology::from_edges(4, star), DesiredDistribution::random(4, rng));
    check(BinTopology::from_edges(4, loop), DesiredDistribution::random(4, rng));
    for (int t = 0; t < 40; ++t) {
        const auto topo = t % 2 ? random_graph(std::uniform_int_distribution<int>(2, 40)(rng), rng) : random_topology(rng);
        check(topo, DesiredDistribution::random(topo.n_bins(), rng));
    }
    report(3, "B-matrix rank", good == checked, fmt("rank = n-1 on %d/%d connected topologies", good, checked),
           timer.seconds());
}

double mean_of(const std::vector<double>& v, std::size_t from, std::size_t to) {
    to = std::min(to, v.size());
    if (from >= to) return 0.0;
    double s = 0.0;
    for (std::size_t k = from; k < to; ++k) s += v[k];
    return s / static_cast<double>(to - from);
}

double median_of(const std::vector<double>& v, std::size_t from, std::size_t to) {
    to = std::min(to, v.size());
    if (from >= to) return 0.0;
    return median(std::vector<double>(v.begin() + static_cast<long>(from), v.begin() + static_cast<long>(to)));
}

Scenario preset_scenario(const char* name) { return preset(name)->scenario; }

void convergence_settling_alpha() {
    Timer timer;
    const auto base = preset_scenario("p1-fig4");
    const int seeds = 10;
    const auto runs06 = monte_carlo(base, seeds, 1, 5000).traces;
    const double t_runs = timer.seconds();

    std::vector<double> finals, initials;
    bool each_decreased = true;
    for (const auto& tr : runs06) {
        finals.push_back(tr.hellinger.back());
        initials.push_back(tr.hellinger.front());
        each_decreased = each_decreased && tr.hellinger.back() <= tr.hellinger.front() / 3.0;
    }
    const double med_final = median(finals);
    report(4, "convergence (p1-fig4)", med_final <= 0.15 && each_decreased,
           fmt("median D_H(5000) = %.4f over %d seeds (<= 0.15); every run final <= initial/3: %s (initial median %.3f)",
               med_final, seeds, each_decreased ? "yes" : "no", median(initials)),
           t_runs);

    // Settling: per-run median transitioning fraction over the 500 steps after first D_H <= 0.15.
    std::vector<double> settle, settle12;
    int reached = 0;
    for (const auto& tr : runs06) {
        if (const auto hit = first_at_or_below(tr.hellinger, 0.15)) {
            ++reached;
            const auto k = static_cast<std::size_t>(*hit);
            settle.push_back(median_of(tr.transitioning_fraction, k + 1, k + 501));
        }
        if (const auto hit = first_at_or_below(tr.hellinger, 0.12)) {
            const auto k = static_cast<std::size_t>(*hit);
            settle12.push_back(median_of(tr.transitioning_fraction, k + 1, k + 501));
        }
    }
    const double med_settle = settle.empty() ? kInf : median(settle);
    report(5, "settling", reached == seeds && med_settle <= 0.02,
           fmt("median transitioning fraction over 500 steps after D_H <= 0.15: %.4f (<= 0.02), %d/%d runs reached 0.15",
               med_settle, reached, seeds),
           0.0);
    if (!settle12.empty()) {
        info(fmt("after D_H <= 0.12 the same median is %.4f (%zu runs)", median(settle12), settle12.size()));
    }

    Timer t6;
    const double alphas[] = {0.2, 0.6, 1.2};
    double early[3], residual[3];
    for (int a = 0; a < 3; ++a) {
        std::vector<RunTrace> traces;
        if (a == 1) {
            traces = runs06;
        } else {
            auto sc = base;
            sc.guidance.alpha = alphas[a];
            traces = monte_carlo(sc, seeds, 1, 5000).traces;
        }
        std::vector<double> e, r;
        for (const auto& tr : traces) {
            e.push_back(mean_of(tr.transitioning_fraction, 1, 501));
            r.push_back(tr.hellinger.back());
        }
        early[a] = median(e);
        residual[a] = median(r);
    }
    const bool ok = early[0] > early[1] && early[1] > early[2] && residual[0] >= residual[2];
    report(6, "alpha trade-off", ok,
           fmt("early transitioning (steps 1-500) %.4f > %.4f > %.4f for alpha 0.2/0.6/1.2; residual D_H(5000) "
               "%.4f / %.4f / %.4f, residual(0.2) >= residual(1.2)",
               early[0], early[1], early[2], residual[0], residual[1], residual[2]),
           t6.seconds());
}

void expense_comparison() {
    Timer timer;
    const auto lica = *preset("p1-fig5");
    const auto gica = *preset("gica-fig5");
    const int seeds = 20;
    const auto a = monte_carlo(lica.scenario, seeds, 1, lica.n_steps).traces;
    const auto b = monte_carlo(gica.scenario, seeds, 1, gica.n_steps).traces;
    const auto ratios = expense_ratios(a, b);
    const double med = median(ratios);
    std::vector<double> ea, eb, ta, tb;
    for (int r = 0; r < seeds; ++r) {
        ea.push_back(a[static_cast<std::size_t>(r)].cumulative_expense.back());
        eb.push_back(b[static_cast<std::size_t>(r)].cumulative_expense.back());
        ta.push_back(static_cast<double>(a[static_cast<std::size_t>(r)].steps));
        tb.push_back(static_cast<double>(b[static_cast<std::size_t>(r)].steps));
    }
    report(7, "expense vs global baseline", med < 1.0,
           fmt("median expense ratio local/global = %.3f over %d common seeds (< 1)", med, seeds), timer.seconds());
    info(fmt("median cumulative expense %.4g vs %.4g; median steps to stop %.0f vs %.0f", median(ea), median(eb),
             median(ta), median(tb)));
}

struct FluxStats {
    double max_prob_flux = 0.0;
    long long samples = 0;
    long long exceed = 0;
    long long saturated = 0;
    long long saturated_exceed = 0;
    double final_hellinger = 0.0;
};

FluxStats flux_run(const Scenario& sc, std::uint64_t seed, std::int64_t steps) {
    FluxStats st;
    const double cap = sc.guidance.flux_cap;
    const auto topo = build_grid(sc.grid_rows, sc.grid_cols, sc.max_hops);
    const int n = topo.n_bins();
    Eigen::MatrixXi flows(n, n);
    const auto trace = run(sc, seed, steps, [&](const StepRecord& rec) {
        flows.setZero();
        const auto before = rec.state.assignment();
        const auto after = rec.outcome.next.assignment();
        for (std::size_t j = 0; j < before.size(); ++j) {
            if (before[j] != after[j]) ++flows(before[j], after[j]);
        }
        const auto counts = rec.state.counts();
        for (int i = 0; i < n; ++i) {
            for (int l : topo.neighbors(i)) {
                if (l == i) continue;
                ++st.samples;
                const bool over = flows(i, l) > cap;
                st.exceed += over ? 1 : 0;
                if (counts[static_cast<std::size_t>(i)] * rec.outcome.primary(i, l) >= 0.99 * cap) {
                    ++st.saturated;
                    st.saturated_exceed += over ? 1 : 0;
                }
            }
        }
    });
    for (std::size_t k = 1; k < trace.max_prob_flux.size(); ++k) st.max_prob_flux = std::max(st.max_prob_flux, trace.max_prob_flux[k]);
    st.final_hellinger = trace.hellinger.back();
    return st;
}

void flux_bounds() {
    Timer timer;
    const auto small = *preset("p2-fig7");
    const auto large = *preset("p2-fig7-large");
    FluxStats s{}, l{};
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto a = flux_run(small.scenario, seed, small.n_steps);
        const auto b = flux_run(large.scenario, seed, large.n_steps);
        s.max_prob_flux = std::max(s.max_prob_flux, a.max_prob_flux);
        l.max_prob_flux = std::max(l.max_prob_flux, b.max_prob_flux);
        s.samples += a.samples, s.exceed += a.exceed, s.saturated += a.saturated, s.saturated_exceed += a.saturated_exceed;
        l.samples += b.samples, l.exceed += b.exceed, l.saturated += b.saturated, l.saturated_exceed += b.saturated_exceed;
    }
    const double rate_s = static_cast<double>(s.exceed) / static_cast<double>(s.samples);
    const double rate_l = static_cast<double>(l.exceed) / static_cast<double>(l.samples);
    const bool ok = s.max_prob_flux <= small.scenario.guidance.flux_cap &&
                    l.max_prob_flux <= large.scenario.guidance.flux_cap && rate_s < 0.05 && rate_l < rate_s;
    report(8, "flux bounds", ok,
           fmt("max n[i]P[i,l] = %.17g (cap 20) and %.17g (cap 200); realized exceedance %.5f at n=1e4 (< 0.05), "
               "%.5f at n=1e5 (shrinks)",
               s.max_prob_flux, l.max_prob_flux, rate_s, rate_l),
           timer.seconds());
    info(fmt("samples: %lld / %lld (step, directed edge) pairs over 3 seeds", s.samples, l.samples));
    if (s.saturated > 0 && l.saturated > 0) {
        info(fmt("on saturated edges (expected flux >= 0.99 cap): exceedance %.4f at n=1e4, %.4f at n=1e5",
                 static_cast<double>(s.saturated_exceed) / static_cast<double>(s.saturated),
                 static_cast<double>(l.saturated_exceed) / static_cast<double>(l.saturated)));
    }
}

void quorum_behaviour() {
    Timer timer;
    const auto p2 = preset_scenario("p2-fig7");
    const auto quorum = preset_scenario("quorum-fig7");
    const int seeds = 10;
    const auto a = monte_carlo(p2, seeds, 1, 6000).traces;
    const auto b = monte_carlo(quorum, seeds, 1, 3000).traces;
    std::vector<double> ta, tb, early_a, early_b, late_a, late_b;
    for (int r = 0; r < seeds; ++r) {
        const auto& x = a[static_cast<std::size_t>(r)];
        const auto& y = b[static_cast<std::size_t>(r)];
        const auto hx = first_at_or_below(x.hellinger, 0.15);
        const auto hy = first_at_or_below(y.hellinger, 0.15);
        ta.push_back(hx ? static_cast<double>(*hx) : kInf);
        tb.push_back(hy ? static_cast<double>(*hy) : kInf);
        early_a.push_back(mean_of(x.transitioning_fraction, 1, 21));
        early_b.push_back(mean_of(y.transitioning_fraction, 1, 21));
        late_a.push_back(median_of(x.transitioning_fraction, 1001, 3001));
        late_b.push_back(median_of(y.transitioning_fraction, 1001, 3001));
    }
    const double med_a = median(ta), med_b = median(tb);
    const double ea = median(early_a), eb = median(early_b);
    const double la = median(late_a), lb = median(late_b);
    const double late_ratio = lb / la;
    const bool ok = med_b < med_a && eb >= 2.0 * ea && late_ratio >= 0.5 && late_ratio <= 2.0;
    report(9, "quorum behaviour", ok,
           fmt("median steps to D_H <= 0.15: quorum %.0f < p2 %.0f; transitioning over steps 1-20 %.4f vs %.4f "
               "(>= 2x); steps 1001-3000 %.4f vs %.4f (ratio %.2f in [0.5, 2])",
               med_b, med_a, eb, ea, lb, la, late_ratio),
           timer.seconds());
}

void asynchrony() {
    Timer timer;
    const auto base = preset_scenario("p1-fig4");
    const int seeds = 10;
    const double fractions[] = {0.0, 0.1, 0.2, 0.3};
    double settled[4];
    bool all_converged = true;
    std::string detail;
    for (int f = 0; f < 4; ++f) {
        auto sc = base;
        sc.blocking_fraction = fractions[f];
        const auto traces = monte_carlo(sc, seeds, 1, 8000).traces;
        std::vector<double> finals, tail;
        double worst = 0.0;
        std::int64_t checked = 0, connected = 0;
        for (const auto& tr : traces) {
            finals.push_back(tr.hellinger.back());
            worst = std::max(worst, tr.hellinger.back());
            tail.push_back(median_of(tr.transitioning_fraction, 7001, 8001));
            checked += tr.windows_checked;
            connected += tr.windows_connected;
        }
        all_converged = all_converged && worst <= 0.2;
        settled[f] = median(tail);
        info(fmt("blocking %.1f: max D_H(8000) %.4f, median %.4f; settled transitioning %.4f; connected windows %lld/%lld",
                 fractions[f], worst, median(finals), settled[f], static_cast<long long>(connected),
                 static_cast<long long>(checked)));
    }
    const bool graceful = settled[3] <= 2.0 * settled[0];
    report(10, "asynchrony", all_converged && graceful,
           fmt("every run D_H(8000) <= 0.2: %s; settled transitioning at 30%% %.4f <= 2 x %.4f",
               all_converged ? "yes" : "no", settled[3], settled[0]),
           timer.seconds());
}

void sampling() {
    Timer timer;
    const std::vector<double> row{0.2, 0.3, 0.5};
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int draws = 1000000;
    std::vector<int> hits(3, 0);
    for (int d = 0; d < draws; ++d) ++hits[static_cast<std::size_t>(sample_transition(row, unif(rng)))];
    double worst_z = 0.0;
    for (std::size_t q = 0; q < 3; ++q) {
        const double sigma = std::sqrt(draws * row[q] * (1.0 - row[q]));
        worst_z = std::max(worst_z, std::abs(hits[q] - draws * row[q]) / sigma);
    }

    Scenario sc;
    sc.grid_rows = 1;
    sc.grid_cols = 2;
    sc.max_hops = 1;
    sc.policy = PolicyKind::p1;
    sc.theta = {0.5, 0.5};
    sc.n_agents = 100000;
    const GuidanceEngine engine(sc, scenario_theta(sc, 1));
    const std::vector<int> counts{80000, 20000};
    const auto state = SwarmState::from_counts(counts);
    const auto out = engine.step(state, AgentStreams(5));
    Eigen::MatrixXd m(2, 2);
    for (int i = 0; i < 2; ++i) {
        std::vector<double> p{out.primary(i, 0), out.primary(i, 1)};
        const auto blended = blend_rows(p, identity_row(2, i), out.omega[static_cast<std::size_t>(i)]);
        m(i, 0) = blended[0];
        m(i, 1) = blended[1];
    }
    const auto mf = propagate_mean_field(state.distribution(), m);
    const auto emp = out.next.distribution();
    const double tv = 0.5 * (std::abs(mf[0] - emp[0]) + std::abs(mf[1] - emp[1]));
    report(11, "sampling correctness", worst_z <= 3.0 && tv < 0.01,
           fmt("10^6 draws: worst |z| = %.2f (<= 3); mean-field vs agents TV = %.2e (< 0.01), moved fraction %.4f",
               worst_z, tv, out.metrics.transitioning_fraction),
           timer.seconds());
}

// 1 - min over row pairs of the overlap; submultiplicative, used only as a reference.
double overlap_coefficient(const Eigen::MatrixXd& m) {
    double worst = 0.0;
    for (int i = 0; i < m.rows(); ++i) {
        for (int l = i + 1; l < m.rows(); ++l) worst = std::max(worst, 1.0 - m.row(i).cwiseMin(m.row(l)).sum());
    }
    return worst;
}

Eigen::MatrixXd random_stochastic(int n, std::mt19937_64& rng, double sparsity) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) m(i, j) = unif(rng) < sparsity ? 0.0 : unif(rng);
        m(i, std::uniform_int_distribution<int>(0, n - 1)(rng)) += 0.1;
        m.row(i) /= m.row(i).sum();
    }
    return m;
}

void ergodicity() {
    Timer timer;
    std::mt19937_64 rng(606);
    int pairs = 0, sub_ok = 0, proper_ok = 0, proper_checked = 0, overlap_ok = 0;
    double worst = -kInf;
    for (int t = 0; t < 200; ++t) {
        const int n = std::uniform_int_distribution<int>(2, 10)(rng);
        const double sparsity = 0.1 * (t % 8);
        const auto a = random_stochastic(n, rng, sparsity);
        const auto b = random_stochastic(n, rng, sparsity);
        const double lhs = ergodicity_coefficient(a * b);
        const double rhs = ergodicity_coefficient(a) * ergodicity_coefficient(b);
        ++pairs;
        sub_ok += lhs <= rhs + 1e-12 ? 1 : 0;
        worst = std::max(worst, lhs - rhs);
        overlap_ok += overlap_coefficient(a * b) <= overlap_coefficient(a) * overlap_coefficient(b) + 1e-12 ? 1 : 0;

        // Identical rows give zero; any differing row gives a positive value.
        Eigen::MatrixXd same(n, n);
        for (int i = 0; i < n; ++i) same.row(i) = a.row(0);
        proper_checked += 2;
        proper_ok += ergodicity_coefficient(same) == 0.0 ? 1 : 0;
        Eigen::MatrixXd diff = same;
        diff.row(n - 1) = b.row(0);
        const bool differs = (diff.row(n - 1) - diff.row(0)).cwiseAbs().maxCoeff() > 0.0;
        proper_ok += (ergodicity_coefficient(diff) > 0.0) == differs ? 1 : 0;
    }
    report(12, "ergodicity coefficient", sub_ok == pairs && proper_ok == proper_checked,
           fmt("submultiplicative on %d/%d pairs (max tau(AB) - tau(A)tau(B) = %.3g); properness %d/%d", sub_ok, pairs,
               worst, proper_ok, proper_checked),
           timer.seconds());
    info(fmt("reference: the row-overlap coefficient is submultiplicative on %d/%d of the same pairs", overlap_ok, pairs));
    Eigen::MatrixXd a(4, 4), b(4, 4);
    a << 0.5, 0.5, 0, 0, 0.5, 0.5, 0, 0, 0, 0, 0.5, 0.5, 0, 0, 0.5, 0.5;
    b << 1, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0;
    info(fmt("max column spread: tau(A) = %.2f, tau(B) = %.2f, tau(AB) = %.2f for the block-averaging pair",
             ergodicity_coefficient(a), ergodicity_coefficient(b), ergodicity_coefficient(a * b)));
}

}  // namespace

int main() {
    std::printf("swarmguide acceptance\n");
    requirement_suite();
    b_matrix_ranks();
    convergence_settling_alpha();
    expense_comparison();
    flux_bounds();
    quorum_behaviour();
    asynchrony();
    sampling();
    ergodicity();
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
