// SPDX-License-Identifier: Apache-2.0

#include "chgen/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "chgen/error.hpp"
#include "json.hpp"

namespace chgen::metrics {

namespace {

void require_points(const VectorizedSet& a, const VectorizedSet& b, const char* who) {
    if (a.count() < 2 || b.count() < 2) throw ValidationError(std::string(who) + ": each set needs at least 2 points");
    if (a.dim() != b.dim()) {
        throw ValidationError(std::string(who) + ": dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                              std::to_string(b.dim()) + ")");
    }
}

std::vector<double> column_mean(const RealMatrix& x) {
    std::vector<double> mu(x.cols(), 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto row = x.row(r);
        for (std::size_t c = 0; c < x.cols(); ++c) mu[c] += row[c];
    }
    for (auto& m : mu) m /= static_cast<double>(x.rows());
    return mu;
}

// Sample covariance (n - 1 denominator) plus ridge * I.
RealMatrix covariance(const RealMatrix& x, const std::vector<double>& mu, double ridge) {
    const std::size_t d = x.cols();
    RealMatrix cov(d, d);
    std::vector<double> centered(d);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto row = x.row(r);
        for (std::size_t c = 0; c < d; ++c) centered[c] = row[c] - mu[c];
        for (std::size_t i = 0; i < d; ++i) {
            const double ci = centered[i];
            if (ci == 0.0) continue;
            auto out = cov.row(i);
            for (std::size_t j = i; j < d; ++j) out[j] += ci * centered[j];
        }
    }
    const double denom = static_cast<double>(x.rows() - 1);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            const double v = cov(i, j) / denom;
            cov(i, j) = v;
            cov(j, i) = v;
        }
        cov(i, i) += ridge;
    }
    return cov;
}

double squared_distance(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double d = x[k] - y[k];
        s += d * d;
    }
    return s;
}

}  // namespace

double nmse(const ComplexMatrix& h, const ComplexMatrix& h_hat) {
    if (h.rows() != h_hat.rows() || h.cols() != h_hat.cols()) throw ValidationError("nmse: shape mismatch");
    const double ref = linalg::squared_frobenius_norm(h);
    if (ref == 0.0) throw ValidationError("nmse: reference channel is zero");
    double err = 0.0;
    const auto a = h.data();
    const auto b = h_hat.data();
    for (std::size_t k = 0; k < a.size(); ++k) err += std::norm(a[k] - b[k]);
    return err / ref;
}

double mean_nmse(const datasets::ChannelDataset& reference, const datasets::ChannelDataset& estimate) {
    if (reference.size() != estimate.size()) throw ValidationError("nmse: datasets differ in sample count");
    if (reference.empty()) throw ValidationError("nmse: datasets are empty");
    double total = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        auto h = reference.samples[i];
        auto e = estimate.samples[i];
        h *= reference.scale;
        e *= estimate.scale;
        total += nmse(h, e);
    }
    return total / static_cast<double>(reference.size());
}

VectorizedSet vectorize(std::span<const ComplexMatrix> channels) {
    if (channels.empty()) return {};
    const std::size_t block = channels.front().size();
    VectorizedSet out{RealMatrix(channels.size(), 2 * block)};
    for (std::size_t i = 0; i < channels.size(); ++i) {
        const auto data = channels[i].data();
        if (data.size() != block) throw ValidationError("vectorize: channels differ in shape");
        auto row = out.rows.row(i);
        for (std::size_t e = 0; e < block; ++e) {
            row[e] = data[e].real();
            row[block + e] = data[e].imag();
        }
    }
    return out;
}

VectorizedSet vectorize(const datasets::ChannelDataset& ds) {
    auto out = vectorize(std::span<const ComplexMatrix>(ds.samples));
    if (ds.scale != 1.0) {
        for (auto& x : out.rows.data()) x *= ds.scale;
    }
    return out;
}

std::vector<ComplexMatrix> unvectorize(const VectorizedSet& set, std::size_t n_r, std::size_t n_t) {
    const std::size_t block = n_r * n_t;
    if (set.count() > 0 && set.dim() != 2 * block) throw ValidationError("unvectorize: dimension mismatch");
    std::vector<ComplexMatrix> out;
    out.reserve(set.count());
    for (std::size_t i = 0; i < set.count(); ++i) {
        const auto row = set.rows.row(i);
        ComplexMatrix h(n_r, n_t);
        auto d = h.data();
        for (std::size_t e = 0; e < block; ++e) d[e] = {row[e], row[block + e]};
        out.push_back(std::move(h));
    }
    return out;
}

double w2_gaussian(const VectorizedSet& a, const VectorizedSet& b) {
    require_points(a, b, "w2_gaussian");
    const auto mu_a = column_mean(a.rows);
    const auto mu_b = column_mean(b.rows);
    double mean_term = 0.0;
    for (std::size_t k = 0; k < mu_a.size(); ++k) mean_term += (mu_a[k] - mu_b[k]) * (mu_a[k] - mu_b[k]);

    const RealMatrix cov_a = covariance(a.rows, mu_a, kCovarianceRidge);
    const RealMatrix cov_b = covariance(b.rows, mu_b, kCovarianceRidge);

    double trace_term = 0.0;
    // Equal covariances cancel exactly: tr(2S - 2 (S^2)^{1/2}) = 0.
    if (!(cov_a == cov_b)) {
        // tr (S_b^{1/2} S_a S_b^{1/2})^{1/2} is the nuclear norm of S_a^{1/2} S_b^{1/2}.
        const RealMatrix cross = linalg::psd_sqrt(cov_a) * linalg::psd_sqrt(cov_b);
        double nuclear = 0.0;
        for (double s : linalg::singular_values(cross)) nuclear += s;
        trace_term = cov_a.trace() + cov_b.trace() - 2.0 * nuclear;
    }
    return std::sqrt(std::max(0.0, mean_term + trace_term));
}

double mmd_rbf(const VectorizedSet& first, const VectorizedSet& second) {
    require_points(first, second, "mmd_rbf");
    if (first.rows == second.rows) return 0.0;
    // Fixed operand order so swapping the arguments repeats the same floating-point sums.
    const auto fd = first.rows.data();
    const auto sd = second.rows.data();
    const bool swap = first.count() != second.count()
                          ? first.count() > second.count()
                          : std::ranges::lexicographical_compare(sd, fd);
    const VectorizedSet& a = swap ? second : first;
    const VectorizedSet& b = swap ? first : second;

    const std::size_t m = a.count();
    const std::size_t n = b.count();
    const std::size_t total = m + n;
    auto point = [&](std::size_t i) { return i < m ? a.rows.row(i) : b.rows.row(i - m); };

    std::vector<double> dist(total * total, 0.0);
    std::vector<double> pairs;
    pairs.reserve(total * (total - 1) / 2);
    for (std::size_t i = 0; i < total; ++i) {
        for (std::size_t j = i + 1; j < total; ++j) {
            const double d = squared_distance(point(i), point(j));
            dist[i * total + j] = d;
            dist[j * total + i] = d;
            pairs.push_back(d);
        }
    }
    const auto mid = pairs.begin() + static_cast<std::ptrdiff_t>(pairs.size() / 2);
    std::nth_element(pairs.begin(), mid, pairs.end());
    double sigma2 = *mid;
    if (pairs.size() % 2 == 0) {
        const double lower = *std::max_element(pairs.begin(), mid);
        sigma2 = 0.5 * (sigma2 + lower);
    }
    if (!(sigma2 > 0.0)) sigma2 = 1.0;
    const double inv = 1.0 / (2.0 * sigma2);

    double kaa = 0.0;
    double kbb = 0.0;
    double kab = 0.0;
    for (std::size_t i = 0; i < total; ++i) {
        for (std::size_t j = i + 1; j < total; ++j) {
            const double k = std::exp(-dist[i * total + j] * inv);
            if (j < m) {
                kaa += 2.0 * k;
            } else if (i >= m) {
                kbb += 2.0 * k;
            } else {
                kab += k;
            }
        }
    }
    const double dm = static_cast<double>(m);
    const double dn = static_cast<double>(n);
    return kaa / (dm * (dm - 1.0)) + kbb / (dn * (dn - 1.0)) - 2.0 * kab / (dm * dn);
}

std::string to_json(const std::vector<MetricResult>& results) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : results) {
        out.push_back({{"metric", r.metric},
                       {"value", r.value},
                       {"count_a", r.count_a},
                       {"count_b", r.count_b},
                       {"dim", r.dim}});
    }
    return out.dump(2);
}

}  // namespace chgen::metrics
