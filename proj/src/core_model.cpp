#include "optfft/core_model.hpp"

#include <cmath>
#include <string>

#include "optfft/errors.hpp"

namespace optfft {

void validate_spec(const OptionSpec& spec) {
    auto finite = [](double x) { return std::isfinite(x); };
    if (!finite(spec.spot) || spec.spot <= 0.0)
        throw ValidationError("stock price S must be positive", "S");
    if (!finite(spec.strike) || spec.strike < 0.0)
        throw ValidationError("strike K must be non-negative", "K");
    if (!finite(spec.rate))
        throw ValidationError("rate R must be finite", "R");
    if (!finite(spec.dividend_yield) || spec.dividend_yield < 0.0)
        throw ValidationError("dividend yield Y must be non-negative", "Y");
    if (!finite(spec.volatility) || spec.volatility <= 0.0)
        throw ValidationError("volatility must be positive", "V");
    if (!finite(spec.days) || spec.days <= 0.0)
        throw ValidationError("days to expiry E must be positive", "E");
    if (spec.steps < 1)
        throw ValidationError("steps must be >= 1", "T");
}

BinomialParams derive_binomial_params(const OptionSpec& spec) {
    validate_spec(spec);
    BinomialParams bp;
    bp.dt = spec.days / (365.0 * static_cast<double>(spec.steps));
    bp.log_u = spec.volatility * std::sqrt(bp.dt);
    bp.u = std::exp(bp.log_u);
    bp.d = 1.0 / bp.u;
    const double growth = std::exp((spec.rate - spec.dividend_yield) * bp.dt);
    bp.p = (growth - bp.d) / (bp.u - bp.d);
    if (!(bp.p > 0.0 && bp.p < 1.0)) {
        throw DomainError("risk-neutral probability p = " + std::to_string(bp.p) +
                              " is outside (0, 1); lattice admits arbitrage (increase steps or V)",
                          "p");
    }
    bp.m = std::exp(-spec.rate * bp.dt);
    bp.s0 = bp.m * (1.0 - bp.p);
    bp.s1 = bp.m * bp.p;
    return bp;
}

double green_value_binomial(const OptionSpec& spec, const BinomialParams& params,
                            std::int64_t i, std::int64_t j) {
    return spec.spot * std::exp(static_cast<double>(2 * j - i) * params.log_u) - spec.strike;
}

GreenTable::GreenTable(const OptionSpec& spec, const BinomialParams& params)
    : steps_(spec.steps), strike_(spec.strike), stock_(static_cast<std::size_t>(2 * spec.steps + 1)) {
    for (std::int64_t e = -steps_; e <= steps_; ++e)
        stock_[static_cast<std::size_t>(e + steps_)] =
            spec.spot * std::exp(static_cast<double>(e) * params.log_u);
}

}  // namespace optfft
