#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "optfft/american_fast.hpp"
#include "optfft/binomial_pricing.hpp"
#include "optfft/bsm_pricing.hpp"

namespace optfft::cli {

std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

double price(const PricingRequest& req) {
    const std::string& m = req.method;
    if (req.style == "european" && req.right == "call" && req.model == "binomial") {
        if (m == "fast") return fast_european(req.spec);
        if (m == "baseline") return baseline_european(req.spec);
        if (m == "gaussian") return gaussian_approx_european(req.spec);
        if (m == "closed-form") return closed_form_european(req.spec);
        throw UnsupportedError("european binomial call has no method '" + m + "'", "method");
    }
    if (req.style == "american" && req.right == "call" && req.model == "binomial") {
        if (m == "fast") {
            AmericanFastOptions o;
            o.parallel = req.parallel;
            return fast_american_call(req.spec, o).price;
        }
        if (m == "baseline") return baseline_american_call(req.spec).price;
        throw UnsupportedError("american binomial call has no method '" + m + "'", "method");
    }
    if (req.style == "american" && req.right == "put" && req.model == "bsm") {
        const double lambda = req.lambda.value_or(0.4);
        if (m == "fast") {
            BsmFastOptions o;
            o.parallel = req.parallel;
            return fast_put_bsm(req.spec, lambda, o).price;
        }
        if (m == "baseline") return baseline_put_fd(req.spec, lambda).price;
        throw UnsupportedError("american bsm put has no method '" + m + "'", "method");
    }
    throw UnsupportedError("unsupported combination " + req.style + " " + req.right + " " + req.model +
                               " (supported: european call binomial, american call binomial, american put bsm)",
                           "style");
}

int report_error(const std::exception& e, std::ostream& err) {
    const auto* oe = dynamic_cast<const Error*>(&e);
    err << "error: " << e.what();
    if (oe && !oe->field().empty()) err << " [field " << oe->field() << "]";
    err << "\n";
    if (dynamic_cast<const UnsupportedError*>(&e)) return kUnsupported;
    return kInvalidInput;
}

int cmd_price(const PricingRequest& req, std::ostream& out, std::ostream& err) {
    double p = 0.0;
    try {
        p = price(req);
    } catch (const std::exception& e) {
        return report_error(e, err);
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", p);
    const OptionSpec& s = req.spec;
    out << buf << "\n";
    out << req.style << " " << req.right << " " << req.model << " " << req.method << " S=" << s.spot
        << " K=" << s.strike << " R=" << s.rate << " Y=" << s.dividend_yield << " V=" << s.volatility
        << " E=" << s.days << " T=" << s.steps;
    if (req.model == "bsm") out << " lambda=" << req.lambda.value_or(0.4);
    out << "\n";
    return kOk;
}

const std::vector<std::string>& bench_methods() {
    static const std::vector<std::string> names{
        "fast_european", "baseline_european", "gaussian_european", "closed_form_european",
        "fast_american", "baseline_american", "fast_bsm_put",      "baseline_bsm_put",
    };
    return names;
}

namespace {

double run_method(const std::string& method, const OptionSpec& spec, double lambda, bool parallel) {
    PricingRequest req;
    req.spec = spec;
    req.lambda = lambda;
    req.parallel = parallel;
    if (method == "fast_european" || method == "baseline_european" || method == "gaussian_european" ||
        method == "closed_form_european") {
        const std::string m = method.substr(0, method.find('_'));
        req.method = m == "closed" ? "closed-form" : m;
    } else if (method == "fast_american" || method == "baseline_american") {
        req.style = "american";
        req.method = method.substr(0, method.find('_'));
    } else if (method == "fast_bsm_put" || method == "baseline_bsm_put") {
        req.style = "american";
        req.right = "put";
        req.model = "bsm";
        req.method = method.substr(0, method.find('_'));
    } else {
        throw UnsupportedError("unknown bench method '" + method + "'", "method");
    }
    return price(req);
}

}  // namespace

std::vector<BenchRecord> run_bench(const BenchOptions& opts) {
    std::vector<std::int64_t> steps = opts.steps;
    std::sort(steps.begin(), steps.end());
    for (const auto& m : opts.methods)
        if (std::find(bench_methods().begin(), bench_methods().end(), m) == bench_methods().end())
            throw UnsupportedError("unknown bench method '" + m + "'", "method");
    std::vector<BenchRecord> records;
    for (const auto& m : opts.methods) {
        for (std::int64_t T : steps) {
            OptionSpec spec = opts.spec;
            spec.steps = T;
            std::vector<double> times;
            double p = 0.0;
            for (int r = 0; r < std::max(1, opts.reps); ++r) {
                const auto t0 = std::chrono::steady_clock::now();
                p = run_method(m, spec, opts.lambda, opts.parallel);
                times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            }
            std::sort(times.begin(), times.end());
            const std::size_t n = times.size();
            const double median = n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
            records.push_back({m, T, std::max(median, 1e-9), p, std::max(1, opts.reps)});
        }
    }
    return records;
}

void write_bench_csv(const std::vector<BenchRecord>& records, std::ostream& out) {
    out << "method,T,seconds,price,reps\n";
    for (const auto& r : records)
        out << r.method << "," << r.steps << "," << format_double(r.seconds) << "," << format_double(r.price) << ","
            << r.reps << "\n";
}

int cmd_bench(const BenchOptions& opts, std::ostream& out, std::ostream& err) {
    std::vector<BenchRecord> records;
    try {
        records = run_bench(opts);
    } catch (const std::exception& e) {
        return report_error(e, err);
    }
    if (opts.csv_path.empty()) {
        write_bench_csv(records, out);
        return kOk;
    }
    std::ofstream file(opts.csv_path);
    if (!file) {
        err << "error: cannot open " << opts.csv_path << " for writing\n";
        return kIoError;
    }
    write_bench_csv(records, file);
    file.flush();
    if (!file) {
        err << "error: failed writing " << opts.csv_path << "\n";
        return kIoError;
    }
    return kOk;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, ',')) fields.push_back(cur);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

template <class T>
T parse_number(const std::string& text, const std::string& field) {
    T value{};
    const std::string t = trim(text);
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw ValidationError("cannot parse '" + text + "' as a number", field);
    return value;
}

}  // namespace

int cmd_batch(std::istream& in, std::ostream& out, std::ostream& err, bool parallel) {
    static const std::string base_header = "style,right,model,method,S,K,R,Y,V,E,T";
    std::string header;
    if (!std::getline(in, header)) {
        err << "error: empty portfolio file\n";
        return kIoError;
    }
    if (!header.empty() && header.back() == '\r') header.pop_back();
    bool with_lambda = false;
    if (header == base_header + ",lambda") {
        with_lambda = true;
    } else if (header != base_header) {
        err << "error: malformed header; expected '" << base_header << "[,lambda]'\n";
        return kIoError;
    }
    const std::size_t ncols = with_lambda ? 12 : 11;
    static const char* names[] = {"style", "right", "model", "method", "S", "K",
                                  "R",     "Y",     "V",     "E",      "T", "lambda"};

    out << header << ",price,status\n";
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const std::vector<std::string> f = split_csv(line);
        std::string price_text, status = "ok";
        try {
            if (f.size() != ncols)
                throw ValidationError("expected " + std::to_string(ncols) + " fields", "row");
            PricingRequest req;
            req.style = trim(f[0]);
            req.right = trim(f[1]);
            req.model = trim(f[2]);
            req.method = trim(f[3]);
            req.spec.spot = parse_number<double>(f[4], names[4]);
            req.spec.strike = parse_number<double>(f[5], names[5]);
            req.spec.rate = parse_number<double>(f[6], names[6]);
            req.spec.dividend_yield = parse_number<double>(f[7], names[7]);
            req.spec.volatility = parse_number<double>(f[8], names[8]);
            req.spec.days = parse_number<double>(f[9], names[9]);
            req.spec.steps = parse_number<std::int64_t>(f[10], names[10]);
            if (with_lambda && !trim(f[11]).empty()) req.lambda = parse_number<double>(f[11], names[11]);
            req.parallel = parallel;
            price_text = format_double(price(req));
        } catch (const Error& e) {
            status = "error:" + (e.field().empty() ? std::string("unknown") : e.field());
        } catch (const std::exception&) {
            status = "error:unknown";
        }
        out << line << "," << price_text << "," << status << "\n";
    }
    if (in.bad()) {
        err << "error: failed reading portfolio\n";
        return kIoError;
    }
    return kOk;
}

}  // namespace optfft::cli
