#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "snowpipe/error.hpp"
#include "snowpipe/eval.hpp"

namespace snowpipe {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b, std::size_t min_len)
{
    if (a.size() != b.size()) {
        throw Error(ErrorCode::LengthMismatch,
                    "lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()) + " differ");
    }
    if (a.size() < min_len) {
        throw Error(ErrorCode::LengthMismatch, "need at least " + std::to_string(min_len) + " values");
    }
}

double mean_of(std::span<const double> v)
{
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return s / static_cast<double>(v.size());
}

} // namespace

double pearson(std::span<const double> a, std::span<const double> b)
{
    check_lengths(a, b, 2);
    const double ma = mean_of(a);
    const double mb = mean_of(b);
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) {
        throw Error(ErrorCode::ZeroVariance, "Pearson correlation of a constant vector");
    }
    const double r = sab / std::sqrt(saa * sbb);
    return std::clamp(r, -1.0, 1.0);
}

double rmse(std::span<const double> a, std::span<const double> b)
{
    check_lengths(a, b, 1);
    double ss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(a.size()));
}

double r2(std::span<const double> pred, std::span<const double> truth)
{
    check_lengths(pred, truth, 2);
    const double mt = mean_of(truth);
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double e = pred[i] - truth[i];
        const double d = truth[i] - mt;
        ss_res += e * e;
        ss_tot += d * d;
    }
    if (!(ss_tot > 0.0)) {
        throw Error(ErrorCode::ZeroVariance, "R^2 against a constant truth vector");
    }
    return 1.0 - ss_res / ss_tot;
}

double mean_bias(std::span<const double> pred, std::span<const double> truth)
{
    check_lengths(pred, truth, 1);
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        s += pred[i] - truth[i];
    }
    return s / static_cast<double>(pred.size());
}

EvalReport evaluate(std::span<const double> pred, std::span<const double> truth, std::string label, bool debiased)
{
    EvalReport r;
    r.regime_label = std::move(label);
    r.n = pred.size();
    r.pearson_r = pearson(pred, truth);
    r.rmse = rmse(pred, truth);
    r.r2 = r2(pred, truth);
    r.mean_bias = mean_bias(pred, truth);
    r.debiased = debiased;
    return r;
}

void write_report_csv(std::span<const EvalReport> reports, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    }
    out << "regime_label,n,pearson,rmse,r2,mean_bias,debias_flag\n";
    char buf[256];
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof buf, "%s,%zu,%.17g,%.17g,%.17g,%.17g,%d\n", r.regime_label.c_str(), r.n,
                      r.pearson_r, r.rmse, r.r2, r.mean_bias, r.debiased ? 1 : 0);
        out << buf;
    }
}

std::string summary_line(const EvalReport& r)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-24s n=%-7zu r=%.4f  rmse=%.4f m  r2=%.4f  bias=%+.4f m%s", r.regime_label.c_str(),
                  r.n, r.pearson_r, r.rmse, r.r2, r.mean_bias, r.debiased ? "  [debiased]" : "");
    return buf;
}

} // namespace snowpipe
