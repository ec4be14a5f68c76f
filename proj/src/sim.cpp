#include "swarmguide/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

namespace swarmguide {

namespace {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint32_t tag) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag};
    return std::mt19937_64(seq);
}

constexpr std::uint32_t kThetaTag = 0x7468u;
constexpr std::uint32_t kMaskTag = 0x6d61u;

[[noreturn]] void bad_key(const std::string& key, const std::string& domain) {
    throw std::invalid_argument(key + " must be " + domain);
}

// Compact inverse CDF over the positive entries of a composed row.
struct RowSampler {
    std::vector<int> bins;
    std::vector<double> cumulative;

    int draw(double u) const {
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        if (it == cumulative.end()) return bins.back();
        return bins[static_cast<std::size_t>(it - cumulative.begin())];
    }
};

}  // namespace

std::string_view policy_name(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::p1: return "p1";
        case PolicyKind::p1_boosted: return "p1-boosted";
        case PolicyKind::p2: return "p2";
        case PolicyKind::p2_quorum: return "p2+quorum";
        case PolicyKind::gica_baseline: return "gica-baseline";
    }
    throw std::logic_error("unknown policy kind");
}

PolicyKind parse_policy(std::string_view name) {
    if (name == "p1") return PolicyKind::p1;
    if (name == "p1-boosted") return PolicyKind::p1_boosted;
    if (name == "p2") return PolicyKind::p2;
    if (name == "p2+quorum" || name == "p2-quorum") return PolicyKind::p2_quorum;
    if (name == "gica-baseline") return PolicyKind::gica_baseline;
    throw std::invalid_argument("policy must be one of p1, p1-boosted, p2, p2+quorum, gica-baseline (got '" +
                                std::string(name) + "')");
}

bool has_secondary(PolicyKind kind) { return kind != PolicyKind::p2; }

void Scenario::validate() const {
    if (grid_rows < 1) bad_key("grid_rows", ">= 1");
    if (grid_cols < 1) bad_key("grid_cols", ">= 1");
    if (static_cast<long long>(grid_rows) * grid_cols < 2) bad_key("grid_rows*grid_cols", ">= 2");
    if (max_hops < 1) bad_key("max_hops", ">= 1");
    if (n_agents < 1) bad_key("n_agents", ">= 1");
    const int n = grid_rows * grid_cols;
    if (start_bin < 0 || start_bin >= n) bad_key("start_bin", "in [0, " + std::to_string(n - 1) + "]");
    if (!theta.empty()) {
        if (static_cast<int>(theta.size()) != n) bad_key("theta", "a list of " + std::to_string(n) + " values");
        try {
            DesiredDistribution check(theta);
        } catch (const std::invalid_argument& e) {
            bad_key("theta", std::string("a valid distribution: ") + e.what());
        }
    }
    if (!(blocking_fraction >= 0.0 && blocking_fraction <= 1.0)) bad_key("blocking_fraction", "in [0, 1]");
    if (connectivity_window < 1) bad_key("connectivity_window", ">= 1");
    if (stop_hellinger && !(*stop_hellinger >= 0.0 && *stop_hellinger <= 1.0)) bad_key("stop_hellinger", "in [0, 1]");
    guidance.validate();
    // With tau = 0 the first epoch can reach omega = 1.
    if (has_secondary(policy) && !(guidance.tau > 0.0)) {
        bad_key("tau", "> 0 for policy " + std::string(policy_name(policy)));
    }
}

std::string config_digest(const Scenario& s) {
    const auto& g = s.guidance;
    nlohmann::json j = {
        {"grid_rows", s.grid_rows},
        {"grid_cols", s.grid_cols},
        {"max_hops", s.max_hops},
        {"n_agents", s.n_agents},
        {"start_bin", s.start_bin},
        {"theta", s.theta},
        {"theta_seed", s.theta_seed ? nlohmann::json(*s.theta_seed) : nlohmann::json(nullptr)},
        {"policy", policy_name(s.policy)},
        {"blocking_fraction", s.blocking_fraction},
        {"connectivity_window", s.connectivity_window},
        {"stop_hellinger", s.stop_hellinger ? nlohmann::json(*s.stop_hellinger) : nlohmann::json(nullptr)},
        {"alpha", g.alpha},
        {"eps_xi", g.eps_xi},
        {"eps_m", g.eps_m},
        {"beta", g.beta},
        {"tau", g.tau},
        {"gamma", g.gamma},
        {"quorum", g.quorum},
        {"flux_cap", g.flux_cap},
        {"expense_slope", g.expense_slope},
        {"expense_offset", g.expense_offset},
        {"eps_e", g.eps_e},
        {"use_theta_boost", g.use_theta_boost},
    };
    const std::string text = j.dump();

    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    std::ostringstream hex;
    for (unsigned int b = 0; b < len; ++b) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[b]);
    return hex.str();
}

double hellinger(std::span<const double> theta, std::span<const double> mu) {
    if (theta.size() != mu.size()) throw std::invalid_argument("hellinger: distributions differ in length");
    double sum = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double d = std::sqrt(theta[i]) - std::sqrt(mu[i]);
        sum += d * d;
    }
    return std::min(1.0, std::sqrt(sum) / std::sqrt(2.0));
}

double AgentStreams::uniform(std::uint64_t agent, std::int64_t step) const {
    std::uint64_t x = mix64(seed_ ^ mix64(agent));
    x = mix64(x ^ mix64(static_cast<std::uint64_t>(step) + 0x632be59bd9b4e019ULL));
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

GuidanceEngine::GuidanceEngine(const Scenario& scenario, DesiredDistribution theta)
    : scenario_((scenario.validate(), scenario)),
      topo_(build_grid(scenario.grid_rows, scenario.grid_cols, scenario.max_hops)),
      theta_(std::move(theta)),
      expense_(ExpenseModel::from_config(topo_, scenario.guidance)),
      boost_(topo_, theta_, scenario.policy == PolicyKind::p1_boosted || scenario.guidance.use_theta_boost) {
    if (theta_.size() != topo_.n_bins()) throw std::invalid_argument("theta length does not match the grid");
    if (scenario_.policy == PolicyKind::p2 || scenario_.policy == PolicyKind::p2_quorum) {
        caps_ = uniform_flux_caps(topo_, scenario_.guidance.flux_cap);
    }
}

std::vector<double> GuidanceEngine::primary_gains(const SwarmState& state) const {
    const auto& cfg = scenario_.guidance;
    if (scenario_.policy == PolicyKind::gica_baseline) return global_gains(state.distribution(), theta_, cfg);
    const auto field = local_field(state.counts(), topo_, theta_);
    std::vector<double> xi(field.density.size());
    for (std::size_t i = 0; i < xi.size(); ++i) xi[i] = primary_gain(field.density[i], field.target[i], cfg);
    return xi;
}

Eigen::MatrixXd GuidanceEngine::primary_matrix(const SwarmState& state, std::span<const double> gains) const {
    const auto& cfg = scenario_.guidance;
    switch (scenario_.policy) {
        case PolicyKind::p1:
        case PolicyKind::p1_boosted:
        case PolicyKind::gica_baseline:
            return ExpenseKernel{topo_, theta_, expense_, boost_, cfg.eps_m}.matrix(gains);
        case PolicyKind::p2:
        case PolicyKind::p2_quorum:
            return p2_matrix(state.counts(), gains, theta_, topo_, caps_, cfg).p;
    }
    throw std::logic_error("unknown policy kind");
}

StepOutcome GuidanceEngine::step(const SwarmState& state, const AgentStreams& streams, const ReadinessMask* mask) const {
    const int n = topo_.n_bins();
    if (state.n_bins() != n) throw std::invalid_argument("state does not match the grid");
    if (mask && mask->size() != n) throw std::invalid_argument("readiness mask does not match the grid");
    const auto& cfg = scenario_.guidance;
    const auto counts = state.counts();
    const std::int64_t k = state.step() + 1;

    auto gains = primary_gains(state);
    Eigen::MatrixXd unmasked = primary_matrix(state, gains);
    Eigen::MatrixXd p = mask ? async_primary_matrix(unmasked, *mask, topo_) : unmasked;

    const auto field = local_field(counts, topo_, theta_);
    const auto mu = state.distribution();

    std::vector<double> omega(static_cast<std::size_t>(n), 0.0);
    std::vector<RowSampler> samplers(static_cast<std::size_t>(n));
    std::vector<double> primary(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        if (counts[static_cast<std::size_t>(i)] == 0) continue;
        for (int l = 0; l < n; ++l) primary[static_cast<std::size_t>(l)] = p(i, l);

        std::vector<double> secondary;
        double gain = 0.0;
        switch (scenario_.policy) {
            case PolicyKind::p1:
            case PolicyKind::p1_boosted:
                secondary = identity_row(n, i);
                gain = settling_gain(field.density[static_cast<std::size_t>(i)], field.target[static_cast<std::size_t>(i)],
                                     cfg.beta);
                break;
            case PolicyKind::gica_baseline:
                secondary = identity_row(n, i);
                gain = gica_secondary_gain(mu, theta_, i, cfg);
                break;
            case PolicyKind::p2:
                secondary = identity_row(n, i);
                break;
            case PolicyKind::p2_quorum: {
                auto [s, g] = quorum_secondary(field.view(topo_, counts, i), topo_, cfg);
                secondary = std::move(s);
                gain = g;
                break;
            }
        }
        // A blocked bin has no local information to weigh the secondary policy with.
        if (mask && !mask->is_ready(i)) gain = 0.0;

        const auto row = compose_row(primary, std::move(secondary), gain, k, cfg);
        omega[static_cast<std::size_t>(i)] = row.omega;
        auto& sampler = samplers[static_cast<std::size_t>(i)];
        double cumulative = 0.0;
        for (int l = 0; l < n; ++l) {
            const double v = row.composed[static_cast<std::size_t>(l)];
            if (v <= 0.0) continue;
            cumulative += v;
            sampler.bins.push_back(l);
            sampler.cumulative.push_back(cumulative);
        }
    }

    const auto assignment = state.assignment();
    std::vector<int> next(assignment.size());
    Eigen::MatrixXi flows = Eigen::MatrixXi::Zero(n, n);
    std::int64_t moved = 0;
    double expense = 0.0;
    for (std::size_t j = 0; j < assignment.size(); ++j) {
        const int i = assignment[j];
        const int q = samplers[static_cast<std::size_t>(i)].draw(streams.uniform(j, k));
        next[j] = q;
        if (q != i) {
            ++moved;
            expense += expense_.expense(i, q);
            ++flows(i, q);
        }
    }

    StepOutcome out{SwarmState(n, std::move(next), k), {}, std::move(p), std::move(unmasked), std::move(gains),
                    std::move(omega)};
    out.metrics.hellinger = hellinger(theta_.values(), out.next.distribution());
    out.metrics.transitioning_fraction =
        assignment.empty() ? 0.0 : static_cast<double>(moved) / static_cast<double>(assignment.size());
    out.metrics.expense = expense;
    out.metrics.max_path_flux = flows.maxCoeff();
    double prob_flux = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int l : topo_.neighbors(i)) {
            if (l != i) prob_flux = std::max(prob_flux, counts[static_cast<std::size_t>(i)] * out.primary(i, l));
        }
    }
    out.metrics.max_prob_flux = prob_flux;
    return out;
}

DesiredDistribution scenario_theta(const Scenario& scenario, std::uint64_t run_seed) {
    if (!scenario.theta.empty()) return DesiredDistribution(scenario.theta);
    auto rng = seeded_engine(scenario.theta_seed.value_or(run_seed), kThetaTag);
    return DesiredDistribution::random(scenario.grid_rows * scenario.grid_cols, rng);
}

RunTrace run(const Scenario& scenario, std::uint64_t seed, std::int64_t n_steps, const StepObserver& observer) {
    scenario.validate();
    if (n_steps < 0) throw std::invalid_argument("n_steps must be >= 0");
    const GuidanceEngine engine(scenario, scenario_theta(scenario, seed));
    const int n = engine.topology().n_bins();
    SwarmState state = SwarmState::all_in_bin(n, scenario.n_agents, scenario.start_bin);
    const AgentStreams streams(seed);
    auto mask_rng = seeded_engine(seed, kMaskTag);
    const bool blocking = scenario.blocking_fraction > 0.0;
    std::optional<ConnectivityMonitor> monitor;
    if (blocking) monitor.emplace(engine.topology(), scenario.connectivity_window);

    RunTrace trace;
    trace.seed = seed;
    trace.config_digest = config_digest(scenario);
    trace.hellinger.push_back(hellinger(engine.theta().values(), state.distribution()));
    trace.transitioning_fraction.push_back(0.0);
    trace.cumulative_expense.push_back(0.0);
    trace.max_path_flux.push_back(0.0);
    trace.max_prob_flux.push_back(0.0);

    for (std::int64_t s = 0; s < n_steps; ++s) {
        if (scenario.stop_hellinger && trace.hellinger.back() <= *scenario.stop_hellinger) break;
        std::optional<ReadinessMask> mask;
        if (blocking) {
            mask = ReadinessMask::random_blocked(n, scenario.blocking_fraction, mask_rng);
            monitor->push(*mask);
        }
        auto outcome = engine.step(state, streams, mask ? &*mask : nullptr);
        if (observer) observer(StepRecord{state, outcome, mask ? &*mask : nullptr});
        trace.hellinger.push_back(outcome.metrics.hellinger);
        trace.transitioning_fraction.push_back(outcome.metrics.transitioning_fraction);
        trace.cumulative_expense.push_back(trace.cumulative_expense.back() + outcome.metrics.expense);
        trace.max_path_flux.push_back(outcome.metrics.max_path_flux);
        trace.max_prob_flux.push_back(outcome.metrics.max_prob_flux);
        state = std::move(outcome.next);
        ++trace.steps;
    }
    if (monitor) {
        trace.windows_checked = monitor->windows_checked();
        trace.windows_connected = monitor->windows_connected();
    }
    return trace;
}

std::optional<std::int64_t> first_at_or_below(std::span<const double> series, double threshold) {
    for (std::size_t k = 0; k < series.size(); ++k) {
        if (series[k] <= threshold) return static_cast<std::int64_t>(k);
    }
    return std::nullopt;
}

RunSummary summarize_run(const RunTrace& trace) {
    if (trace.hellinger.empty()) throw std::invalid_argument("trace has no samples");
    RunSummary s;
    s.seed = trace.seed;
    s.config_digest = trace.config_digest;
    s.steps = trace.steps;
    s.windows_checked = trace.windows_checked;
    s.windows_connected = trace.windows_connected;
    s.initial_hellinger = trace.hellinger.front();
    s.final_hellinger = trace.hellinger.back();
    s.min_hellinger = *std::min_element(trace.hellinger.begin(), trace.hellinger.end());
    s.total_expense = trace.cumulative_expense.back();
    if (trace.transitioning_fraction.size() > 1) {
        double sum = 0.0;
        for (std::size_t k = 1; k < trace.transitioning_fraction.size(); ++k) sum += trace.transitioning_fraction[k];
        s.mean_transitioning_fraction = sum / static_cast<double>(trace.transitioning_fraction.size() - 1);
    }
    for (double t : kThresholds) s.time_to_threshold.push_back(first_at_or_below(trace.hellinger, t));
    return s;
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("quantile of an empty set");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile level must lie in [0,1]");
    std::sort(values.begin(), values.end());
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

QuantileSummary describe(std::vector<double> values) {
    QuantileSummary q;
    q.count = static_cast<int>(values.size());
    if (values.empty()) return q;
    q.median = quantile(values, 0.5);
    q.q25 = quantile(values, 0.25);
    q.q75 = quantile(values, 0.75);
    q.min = *std::min_element(values.begin(), values.end());
    q.max = *std::max_element(values.begin(), values.end());
    return q;
}

BatchSummary summarize_batch(std::span<const RunTrace> traces) {
    BatchSummary b;
    b.n_runs = static_cast<int>(traces.size());
    std::vector<double> finals, expenses;
    for (const auto& t : traces) {
        b.runs.push_back(summarize_run(t));
        finals.push_back(b.runs.back().final_hellinger);
        expenses.push_back(b.runs.back().total_expense);
    }
    for (std::size_t th = 0; th < std::size(kThresholds); ++th) {
        std::vector<double> times;
        for (const auto& r : b.runs) {
            if (r.time_to_threshold[th]) times.push_back(static_cast<double>(*r.time_to_threshold[th]));
        }
        b.time_to_threshold.push_back(describe(std::move(times)));
    }
    b.final_hellinger = describe(std::move(finals));
    b.total_expense = describe(std::move(expenses));
    return b;
}

MonteCarloResult monte_carlo(const Scenario& scenario, int n_runs, std::uint64_t base_seed, std::int64_t n_steps,
                             unsigned threads) {
    if (n_runs < 1) throw std::invalid_argument("n_runs must be >= 1");
    scenario.validate();
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(n_runs));

    MonteCarloResult result;
    result.traces.resize(static_cast<std::size_t>(n_runs));
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto worker = [&] {
        for (int r = next++; r < n_runs; r = next++) {
            try {
                result.traces[static_cast<std::size_t>(r)] = run(scenario, base_seed + static_cast<std::uint64_t>(r), n_steps);
            } catch (...) {
                const std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    result.summary = summarize_batch(result.traces);
    return result;
}

std::vector<double> expense_ratios(std::span<const RunTrace> numerator, std::span<const RunTrace> denominator) {
    if (numerator.size() != denominator.size()) throw std::invalid_argument("expense_ratios: batches differ in size");
    std::vector<double> ratios;
    for (std::size_t r = 0; r < numerator.size(); ++r) {
        ratios.push_back(numerator[r].cumulative_expense.back() / denominator[r].cumulative_expense.back());
    }
    return ratios;
}

}  // namespace swarmguide
