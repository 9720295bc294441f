#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "thetasim/events.hpp"
#include "thetasim/experiments.hpp"

namespace thetasim::stats {

enum class StatsFault { MalformedLog, BadParams, ImpossibleOutcome, SpecMismatch };

inline const char* to_string(StatsFault f) {
    switch (f) {
        case StatsFault::MalformedLog: return "MalformedLog";
        case StatsFault::BadParams: return "BadParams";
        case StatsFault::ImpossibleOutcome: return "ImpossibleOutcome";
        case StatsFault::SpecMismatch: return "SpecMismatch";
    }
    return "?";
}

class StatsError : public std::runtime_error {
public:
    StatsError(StatsFault fault, const std::string& msg)
        : std::runtime_error(std::string(to_string(fault)) + ": " + msg), fault_(fault) {}
    StatsFault fault() const { return fault_; }

private:
    StatsFault fault_;
};

using Counts = std::map<std::string, std::int64_t>;

/// Extracts the single terminal outcome of one trial log. Throws MalformedLog
/// when a log has zero or several terminal outcomes, which indicates an
/// engine bug (or a deliberately mutated engine in the negative tests).
inline std::string terminal_outcome(std::span<const TrialEvent> log) {
    std::string found;
    int n = 0;
    for (const auto& e : log) {
        if (!is_terminal(e)) continue;
        ++n;
        found = outcome_label(e);
    }
    if (n != 1)
        throw StatsError(StatsFault::MalformedLog,
                         "trial has " + std::to_string(n) + " terminal outcomes, expected exactly 1");
    return found;
}

inline void tally_into(Counts& counts, std::span<const TrialEvent> log) { ++counts[terminal_outcome(log)]; }

/// Counts terminal outcomes over many trial logs. Exhaustive and mutually
/// exclusive: each log contributes exactly one count.
inline Counts tally(std::span<const std::vector<TrialEvent>> logs) {
    Counts counts;
    for (const auto& log : logs) tally_into(counts, log);
    return counts;
}

/// Commutative, associative merge of partial tallies from parallel workers.
inline void merge_counts(Counts& into, const Counts& from) {
    for (const auto& [label, n] : from) into[label] += n;
}

/// Wilson score interval for a binomial proportion at critical value z.
/// Exact 0 / 1 bounds at the count boundaries.
inline std::pair<double, double> wilson_interval(std::int64_t count, std::int64_t n, double z) {
    if (n < 1 || count < 0 || count > n || !(z > 0.0))
        throw StatsError(StatsFault::BadParams, "wilson_interval requires 0 <= count <= n, n >= 1, z > 0");
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(count) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    double lo = count == 0 ? 0.0 : std::max(0.0, center - half);
    double hi = count == n ? 1.0 : std::min(1.0, center + half);
    return {lo, hi};
}

// ---------------------------------------------------------------------------
// Regularized incomplete gamma, for the chi-square survival function. Series
// expansion below a+1, Lentz continued fraction above; both standard
// evaluations, validated in the tests against tabulated values and numeric
// quadrature.

namespace detail {

inline double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int n = 0; n < 10000; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_continued_fraction(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace detail

/// Q(a, x) = Gamma(a, x) / Gamma(a), the upper regularized incomplete gamma.
inline double regularized_gamma_upper(double a, double x) {
    if (!(a > 0.0) || x < 0.0)
        throw StatsError(StatsFault::BadParams, "regularized_gamma_upper requires a > 0, x >= 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_continued_fraction(a, x);
}

/// Chi-square survival function: P(X >= x) for k degrees of freedom. k = 0 is
/// the degenerate perfect-fit case (probability mass at 0).
inline double chi_square_sf(double x, std::int64_t k) {
    if (k < 0 || x < 0.0) throw StatsError(StatsFault::BadParams, "chi_square_sf requires x >= 0, k >= 0");
    if (k == 0) return x > 0.0 ? 0.0 : 1.0;
    return regularized_gamma_upper(static_cast<double>(k) / 2.0, x / 2.0);
}

struct GofResult {
    double statistic = 0.0;
    std::int64_t dof = 0;
    double p_value = 1.0;
    bool impossible = false;  // observation in a zero-probability category
};

/// Pearson goodness of fit of observed counts against an expected
/// distribution. Categories with expected probability zero must be empty;
/// an observation there is itself a physics failure and raises
/// ImpossibleOutcome. dof = (categories with expected p > 0) - 1.
inline GofResult chi_square_gof(const Counts& observed, const OutcomeDistribution& expected, std::int64_t trials) {
    if (trials < 1) throw StatsError(StatsFault::BadParams, "chi_square_gof requires trials >= 1");
    std::int64_t seen = 0;
    for (const auto& [label, n] : observed) {
        if (n < 0) throw StatsError(StatsFault::BadParams, "negative count for '" + label + "'");
        if (n == 0) continue;
        seen += n;
        if (expected.prob(label) <= 0.0)
            throw StatsError(StatsFault::ImpossibleOutcome,
                             std::to_string(n) + " observation(s) in zero-probability category '" + label + "'");
    }
    if (seen != trials) throw StatsError(StatsFault::BadParams, "counts do not sum to trials");

    GofResult r;
    for (const auto& [label, p] : expected.entries) {
        if (p <= 0.0) continue;
        const double e = p * static_cast<double>(trials);
        auto it = observed.find(label);
        const double o = it == observed.end() ? 0.0 : static_cast<double>(it->second);
        const double d = o - e;
        r.statistic += d * d / e;
        ++r.dof;
    }
    r.dof = std::max<std::int64_t>(r.dof - 1, 0);
    r.p_value = r.dof == 0 ? 1.0 : chi_square_sf(r.statistic, r.dof);
    return r;
}

/// Aggregated result of one (experiment, engine, mode, seed, trials) run.
struct RunReport {
    ExperimentSpec experiment;
    std::string engine;  // "orthodox" | "pilotwave"
    std::string mode;    // "absorb" | "randomize" for pilotwave, "" otherwise
    std::int64_t trials = 0;
    std::uint64_t seed = 0;
    Counts counts;
    std::map<std::string, double> frequencies;
    std::map<std::string, std::pair<double, double>> intervals;  // 99% Wilson
    GofResult gof;                                               // against the analytic oracle
    std::map<std::string, std::int64_t> events_histogram;        // event kind -> count
};

struct CompareResult {
    bool pass = false;
    double statistic = 0.0;
    std::int64_t dof = 0;
    double p_value = 1.0;
    std::map<std::string, double> frequency_delta;  // a - b per outcome
};

inline constexpr double kEquivalenceAlpha = 0.001;

/// Two-sample chi-square homogeneity test between two runs of the same
/// experiment (possibly different engines, modes or seeds). PASS when
/// p > 0.001. Throws SpecMismatch when the runs describe different setups.
inline CompareResult compare(const RunReport& a, const RunReport& b) {
    if (!(a.experiment == b.experiment))
        throw StatsError(StatsFault::SpecMismatch,
                         "cannot compare '" + a.experiment.label() + "' with '" + b.experiment.label() + "'");

    std::map<std::string, std::pair<double, double>> table;  // label -> (count a, count b)
    for (const auto& [label, n] : a.counts)
        if (n > 0) table[label].first += static_cast<double>(n);
    for (const auto& [label, n] : b.counts)
        if (n > 0) table[label].second += static_cast<double>(n);

    const double na = static_cast<double>(a.trials);
    const double nb = static_cast<double>(b.trials);
    const double grand = na + nb;

    CompareResult r;
    for (const auto& [label, cell] : table) {
        const auto& [oa, ob] = cell;
        const double col = oa + ob;
        const double ea = col * na / grand;
        const double eb = col * nb / grand;
        if (ea > 0.0) r.statistic += (oa - ea) * (oa - ea) / ea;
        if (eb > 0.0) r.statistic += (ob - eb) * (ob - eb) / eb;
        r.frequency_delta[label] = oa / na - ob / nb;
    }
    r.dof = std::max<std::int64_t>(static_cast<std::int64_t>(table.size()) - 1, 0);
    r.p_value = r.dof == 0 ? 1.0 : chi_square_sf(r.statistic, r.dof);
    r.pass = r.p_value > kEquivalenceAlpha;
    return r;
}

}  // namespace thetasim::stats
