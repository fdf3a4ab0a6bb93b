#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "optfft/core_model.hpp"
#include "optfft/errors.hpp"

namespace optfft::cli {

enum ExitCode : int {
    kOk = 0,
    kVerifyFailed = 1,
    kInvalidInput = 2,
    kUnsupported = 3,
    kIoError = 4,
};

/// Requested style/right/model/method is not one of the implemented pricers.
class UnsupportedError : public Error {
    using Error::Error;
};

struct PricingRequest {
    std::string style = "european";
    std::string right = "call";
    std::string model = "binomial";
    std::string method = "fast";
    OptionSpec spec;
    std::optional<double> lambda;
    bool parallel = false;
};

/// Dispatch to the library. Throws UnsupportedError or library errors.
double price(const PricingRequest& req);

/// Maps an exception from price() to an exit code and writes a message.
int report_error(const std::exception& e, std::ostream& err);

int cmd_price(const PricingRequest& req, std::ostream& out, std::ostream& err);

struct VerifyOptions {
    std::int64_t max_steps = 1024;
    std::uint64_t seed = 1;
    int trials = 25;
    bool parallel = false;
};

int cmd_verify(const VerifyOptions& opts, std::ostream& out);

struct BenchOptions {
    std::vector<std::string> methods;
    std::vector<std::int64_t> steps;
    int reps = 3;
    std::string csv_path;  ///< empty: write to `out`
    OptionSpec spec;
    double lambda = 0.4;
    bool parallel = false;
};

struct BenchRecord {
    std::string method;
    std::int64_t steps = 0;
    double seconds = 0.0;
    double price = 0.0;
    int reps = 0;
};

/// Bench method names understood by run_bench.
const std::vector<std::string>& bench_methods();

/// Median-of-reps wall time per (method, T), methods in the given order and
/// T ascending. Throws UnsupportedError for an unknown method.
std::vector<BenchRecord> run_bench(const BenchOptions& opts);

/// Header `method,T,seconds,price,reps` then one row per record.
void write_bench_csv(const std::vector<BenchRecord>& records, std::ostream& out);

int cmd_bench(const BenchOptions& opts, std::ostream& out, std::ostream& err);

/// Prices every row of a portfolio CSV, appending `price,status`.
/// Returns kIoError for an unreadable file or a malformed header.
int cmd_batch(std::istream& in, std::ostream& out, std::ostream& err, bool parallel = false);

/// Shortest round-trip decimal form.
std::string format_double(double x);

}  // namespace optfft::cli
