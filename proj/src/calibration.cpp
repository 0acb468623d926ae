#include "logsad/calibration.hpp"

#include "logsad/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>

namespace logsad {

using nlohmann::json;

void CalibrationStats::check() const {
    std::vector<std::string> problems;
    if (!(sigma_floor > 0.0)) problems.push_back("sigma_floor must be > 0");
    if (!(sigma_p >= sigma_floor)) problems.push_back("sigma_p below sigma_floor");
    if (!(sigma_in >= sigma_floor)) problems.push_back("sigma_in below sigma_floor");
    if (n_samples < 1) problems.push_back("n_samples must be >= 1");
    if (!std::isfinite(mu_p) || !std::isfinite(mu_in)) problems.push_back("means must be finite");
    if (!problems.empty()) throw ValidationError(std::move(problems));
}

namespace {

struct Moments {
    double mean = 0.0;
    double sd = 0.0;  // NaN when n < 2
};

// Welford's single-pass update.
Moments moments(std::span<const double> xs) {
    double mean = 0.0, m2 = 0.0;
    std::size_t n = 0;
    for (double x : xs) {
        ++n;
        const double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
    }
    Moments m{mean, std::numeric_limits<double>::quiet_NaN()};
    if (n >= 2) m.sd = std::sqrt(m2 / static_cast<double>(n - 1));
    return m;
}

double floored(double sd, double floor, const char* name, std::vector<std::string>& flags) {
    if (std::isnan(sd)) {
        flags.push_back(std::string(name) + " undefined for a single sample; clamped to sigma_floor");
        return floor;
    }
    if (sd < floor) {
        flags.push_back(std::string(name) + " below sigma_floor; clamped");
        return floor;
    }
    return sd;
}

}  // namespace

CalibrationStats fit_stats(std::span<const double> patch_scores, std::span<const double> interest_scores,
                           double sigma_floor) {
    if (patch_scores.empty() || interest_scores.empty()) throw ValidationError("calibration needs at least one score");
    if (patch_scores.size() != interest_scores.size())
        throw ValidationError("patch and interest calibration scores differ in length");
    if (!(sigma_floor > 0.0)) throw ValidationError("sigma_floor must be > 0");
    CalibrationStats st;
    st.sigma_floor = sigma_floor;
    st.n_samples = patch_scores.size();
    const auto p = moments(patch_scores);
    const auto in = moments(interest_scores);
    st.mu_p = p.mean;
    st.mu_in = in.mean;
    st.sigma_p = floored(p.sd, sigma_floor, "sigma_p", st.flags);
    st.sigma_in = floored(in.sd, sigma_floor, "sigma_in", st.flags);
    return st;
}

double sigmoid(double x) {
    constexpr double lo = std::numeric_limits<double>::min();
    const double hi = std::nextafter(1.0, 0.0);
    return std::clamp(1.0 / (1.0 + std::exp(-x)), lo, hi);
}

FusedScore fuse_detail(double s_p, double s_in, int s_c, const CalibrationStats& stats) {
    FusedScore f;
    f.z_p = (s_p - stats.mu_p) / stats.sigma_p;
    f.z_in = (s_in - stats.mu_in) / stats.sigma_in;
    f.s = std::max({sigmoid(f.z_p), sigmoid(f.z_in), static_cast<double>(s_c)});
    return f;
}

double fuse(double s_p, double s_in, int s_c, const CalibrationStats& stats) {
    return fuse_detail(s_p, s_in, s_c, stats).s;
}

void save_stats(const CalibrationStats& stats, const std::filesystem::path& destination) {
    json doc = {{"mu_p", stats.mu_p},
                {"sigma_p", stats.sigma_p},
                {"mu_in", stats.mu_in},
                {"sigma_in", stats.sigma_in},
                {"n_samples", stats.n_samples},
                {"sigma_floor", stats.sigma_floor},
                {"mode", stats.mode},
                {"flags", stats.flags},
                {"source_image_ids", stats.source_ids}};
    std::ofstream out(destination, std::ios::trunc);
    if (!out) throw RuntimeError("cannot write calibration '" + destination.string() + "'");
    out << doc.dump(2) << '\n';
}

CalibrationStats load_stats(const std::filesystem::path& source) {
    std::ifstream in(source);
    if (!in) throw ValidationError("cannot open calibration '" + source.string() + "'");
    CalibrationStats st;
    try {
        const json doc = json::parse(in);
        st.mu_p = doc.at("mu_p").get<double>();
        st.sigma_p = doc.at("sigma_p").get<double>();
        st.mu_in = doc.at("mu_in").get<double>();
        st.sigma_in = doc.at("sigma_in").get<double>();
        st.n_samples = doc.at("n_samples").get<std::size_t>();
        st.sigma_floor = doc.value("sigma_floor", kDefaultSigmaFloor);
        st.mode = doc.value("mode", std::string{});
        st.flags = doc.value("flags", std::vector<std::string>{});
        st.source_ids = doc.value("source_image_ids", std::vector<std::string>{});
    } catch (const json::exception& e) {
        throw ValidationError("calibration '" + source.string() + "' is malformed: " + e.what());
    }
    st.check();
    return st;
}

}  // namespace logsad
