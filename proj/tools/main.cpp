#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

void add_spec_flags(CLI::App* cmd, optfft::OptionSpec& spec) {
    cmd->add_option("--spot", spec.spot, "stock price S")->capture_default_str();
    cmd->add_option("--strike", spec.strike, "strike price K")->capture_default_str();
    cmd->add_option("--rate", spec.rate, "risk-free rate R per year")->capture_default_str();
    cmd->add_option("--yield", spec.dividend_yield, "dividend yield Y per year")->capture_default_str();
    cmd->add_option("--vol", spec.volatility, "volatility V per sqrt(year)")->capture_default_str();
    cmd->add_option("--days", spec.days, "days to expiry E")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    using namespace optfft::cli;
    CLI::App app{"FFT-accelerated option pricing"};
    app.require_subcommand(1);

    PricingRequest req;
    double lambda = 0.4;
    auto* price = app.add_subcommand("price", "price one option");
    price->add_option("--style", req.style, "european | american")->capture_default_str();
    price->add_option("--right", req.right, "call | put")->capture_default_str();
    price->add_option("--model", req.model, "binomial | bsm")->capture_default_str();
    price->add_option("--method", req.method, "fast | baseline | gaussian | closed-form")->capture_default_str();
    add_spec_flags(price, req.spec);
    price->add_option("--steps", req.spec.steps, "time steps T")->capture_default_str();
    auto* lambda_opt = price->add_option("--lambda", lambda, "grid ratio d_tau / d_s^2 for bsm")->capture_default_str();
    price->add_flag("--parallel", req.parallel, "fork FFT work onto a second thread");

    VerifyOptions vo;
    auto* verify = app.add_subcommand("verify", "randomized oracle and invariant suites");
    verify->add_option("--steps", vo.max_steps, "largest T exercised")->capture_default_str();
    verify->add_option("--seed", vo.seed, "random seed")->capture_default_str();
    verify->add_option("--trials", vo.trials, "trials per suite")->capture_default_str();
    verify->add_flag("--parallel", vo.parallel, "run fast solvers with task parallelism");

    BenchOptions bo;
    bo.methods = {"fast_european", "baseline_european"};
    bo.steps = {1024, 2048, 4096};
    bo.spec.strike = 90;
    bo.spec.rate = 0.03;
    bo.spec.dividend_yield = 0.07;
    bo.spec.volatility = 0.25;
    auto* bench = app.add_subcommand("bench", "time pricers over a range of T");
    bench->add_option("--method", bo.methods, "methods, comma separated")->delimiter(',')->capture_default_str();
    bench->add_option("--steps", bo.steps, "step counts, comma separated")->delimiter(',')->capture_default_str();
    bench->add_option("--reps", bo.reps, "repetitions per point (median reported)")->capture_default_str();
    bench->add_option("--csv", bo.csv_path, "output CSV path (default stdout)");
    bench->add_option("--lambda", bo.lambda, "grid ratio for bsm methods")->capture_default_str();
    add_spec_flags(bench, bo.spec);
    bench->add_flag("--parallel", bo.parallel, "fork FFT work onto a second thread");

    std::string portfolio, results;
    bool batch_parallel = false;
    auto* batch = app.add_subcommand("batch", "price a portfolio CSV");
    batch->add_option("--csv", portfolio, "input CSV: style,right,model,method,S,K,R,Y,V,E,T[,lambda]")->required();
    batch->add_option("--out", results, "output CSV path (default stdout)");
    batch->add_flag("--parallel", batch_parallel, "fork FFT work onto a second thread");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalidInput;
    }

    if (*price) {
        if (*lambda_opt) req.lambda = lambda;
        return cmd_price(req, std::cout, std::cerr);
    }
    if (*verify) return cmd_verify(vo, std::cout);
    if (*bench) return cmd_bench(bo, std::cout, std::cerr);

    std::ifstream in(portfolio);
    if (!in) {
        std::cerr << "error: cannot open " << portfolio << "\n";
        return kIoError;
    }
    if (results.empty()) return cmd_batch(in, std::cout, std::cerr, batch_parallel);
    std::ofstream out(results);
    if (!out) {
        std::cerr << "error: cannot open " << results << " for writing\n";
        return kIoError;
    }
    return cmd_batch(in, out, std::cerr, batch_parallel);
}
