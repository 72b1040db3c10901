#include "stde/losses.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "stde/kernels.hpp"

namespace stde {

namespace {

double norm(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) {
        acc += x * x;
    }
    return std::sqrt(acc);
}

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

void check_same(const AffinityTensor& a, const AffinityTensor& b, const char* what) {
    if (!a.same_shape(b)) {
        throw DataError(std::string(what) + ": affinity tensor shapes differ (" + std::to_string(a.height()) + "x" +
                        std::to_string(a.width()) + "x" + std::to_string(a.channels()) + " vs " +
                        std::to_string(b.height()) + "x" + std::to_string(b.width()) + "x" +
                        std::to_string(b.channels()) + ")");
    }
}

std::vector<double> pixel_vector(const Tensor3& e, int y, int x) {
    std::vector<double> v(static_cast<std::size_t>(e.channels()));
    for (int d = 0; d < e.channels(); ++d) {
        v[d] = e(d, y, x);
    }
    return v;
}

} // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw InvalidArgument("cosine_similarity: dimension mismatch");
    }
    const double na = norm(a);
    const double nb = norm(b);
    if (na < kernels::kZeroNorm || nb < kernels::kZeroNorm) {
        return 0.5;
    }
    const double c = std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
    return 0.5 * (1.0 + c);
}

void cosine_similarity_backward(std::span<const double> a, std::span<const double> b, double scale,
                                std::span<double> grad_a, std::span<double> grad_b) {
    const double na = norm(a);
    const double nb = norm(b);
    if (na < kernels::kZeroNorm || nb < kernels::kZeroNorm || scale == 0.0) {
        return;
    }
    const double ab = dot(a, b);
    const double inv = 0.5 * scale / (na * nb);
    const double sa = 0.5 * scale * ab / (na * na * na * nb);
    const double sb = 0.5 * scale * ab / (nb * nb * nb * na);
    for (std::size_t i = 0; i < a.size(); ++i) {
        grad_a[i] += inv * b[i] - sa * a[i];
        grad_b[i] += inv * a[i] - sb * b[i];
    }
}

AffinityTensor affinity_weights(const AffinityTensor& target, bool balanced) {
    AffinityTensor w(target.height(), target.width(), target.ranges(), 0.0);
    double pos = 0.0;
    double neg = 0.0;
    for (int c = 0; c < target.channels(); ++c) {
        for (int y = 0; y < target.height(); ++y) {
            for (int x = 0; x < target.width(); ++x) {
                if (!target.neighbor_in_bounds(y, x, c)) {
                    continue;
                }
                w(y, x, c) = 1.0;
                (target(y, x, c) >= 0.5 ? pos : neg) += 1.0;
            }
        }
    }
    if (!balanced) {
        return w;
    }
    const double total = pos + neg;
    if (total == 0.0) {
        return w;
    }
    const double w_pos = neg / total;
    const double w_neg = pos / total;
    for (std::size_t i = 0; i < w.values().size(); ++i) {
        if (w.values()[i] != 0.0) {
            w.values()[i] = target.values()[i] >= 0.5 ? w_pos : w_neg;
        }
    }
    return w;
}

double loss_st(const AffinityTensor& pred, const AffinityTensor& target, const AffinityTensor& weights) {
    check_same(pred, target, "loss_st");
    check_same(weights, target, "loss_st");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < pred.values().size(); ++i) {
        const double w = weights.values()[i];
        if (w == 0.0) {
            continue;
        }
        const double d = pred.values()[i] - target.values()[i];
        num += w * d * d;
        den += w;
    }
    return den > 0.0 ? num / den : 0.0;
}

double loss_st_backward(const AffinityTensor& pred, const AffinityTensor& target, const AffinityTensor& weights,
                        AffinityTensor& grad_pred) {
    check_same(pred, target, "loss_st");
    check_same(weights, target, "loss_st");
    grad_pred = AffinityTensor(pred.height(), pred.width(), pred.ranges(), 0.0);
    double den = 0.0;
    for (double w : weights.values()) {
        den += w;
    }
    if (den == 0.0) {
        return 0.0;
    }
    double num = 0.0;
    for (std::size_t i = 0; i < pred.values().size(); ++i) {
        const double w = weights.values()[i];
        if (w == 0.0) {
            continue;
        }
        const double d = pred.values()[i] - target.values()[i];
        num += w * d * d;
        grad_pred.values()[i] = 2.0 * w * d / den;
    }
    return num / den;
}

double loss_pyramid(std::span<const AffinityTensor> preds, std::span<const AffinityTensor> targets,
                    std::span<const AffinityTensor> weights) {
    if (preds.size() != targets.size() || preds.size() != weights.size()) {
        throw DataError("loss_pyramid: scale sets differ (" + std::to_string(preds.size()) + " predicted, " +
                        std::to_string(targets.size()) + " target)");
    }
    double total = 0.0;
    for (std::size_t s = 0; s < preds.size(); ++s) {
        total += loss_st(preds[s], targets[s], weights[s]);
    }
    return total;
}

int InstanceStats::index_of(std::int32_t label) const {
    const auto it = std::lower_bound(labels.begin(), labels.end(), label);
    if (it == labels.end() || *it != label) {
        return -1;
    }
    return static_cast<int>(it - labels.begin());
}

InstanceStats instance_stats(const Tensor3& e, const LabelMap& labels) {
    if (e.height() != labels.height() || e.width() != labels.width()) {
        throw DataError("instance_stats: embedding is " + std::to_string(e.height()) + "x" +
                        std::to_string(e.width()) + ", labels are " + std::to_string(labels.height()) + "x" +
                        std::to_string(labels.width()));
    }
    const int dims = e.channels();
    std::map<std::int32_t, std::size_t> index;
    for (std::int32_t l : labels.data()) {
        if (l != 0) {
            index.emplace(l, 0);
        }
    }
    InstanceStats st;
    for (auto& [label, idx] : index) {
        idx = st.labels.size();
        st.labels.push_back(label);
    }
    const std::size_t m = st.labels.size();
    st.counts.assign(m, 0);
    st.means.assign(m, std::vector<double>(static_cast<std::size_t>(dims), 0.0));
    st.columns.assign(m, {labels.width(), -1});
    for (int y = 0; y < labels.height(); ++y) {
        for (int x = 0; x < labels.width(); ++x) {
            const std::int32_t l = labels(y, x);
            if (l == 0) {
                continue;
            }
            const std::size_t i = index[l];
            ++st.counts[i];
            for (int d = 0; d < dims; ++d) {
                st.means[i][d] += e(d, y, x);
            }
            st.columns[i].first = std::min(st.columns[i].first, x);
            st.columns[i].second = std::max(st.columns[i].second, x);
        }
    }
    st.unit_means.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (double& v : st.means[i]) {
            v /= static_cast<double>(st.counts[i]);
        }
        const double n = norm(st.means[i]);
        st.unit_means[i] = st.means[i];
        for (double& v : st.unit_means[i]) {
            v = n < kernels::kZeroNorm ? 0.0 : v / n;
        }
    }
    st.neighbors.assign(m, {});
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = 0; b < m; ++b) {
            if (a != b && st.columns[a].first <= st.columns[b].second && st.columns[b].first <= st.columns[a].second) {
                st.neighbors[a].push_back(static_cast<int>(b));
            }
        }
    }
    return st;
}

double loss_concentration(const Tensor3& e, const LabelMap& labels, const InstanceStats& stats) {
    std::int64_t total = 0;
    for (auto k : stats.counts) {
        total += k;
    }
    if (total == 0) {
        return 0.0;
    }
    double acc = 0.0;
    for (int y = 0; y < labels.height(); ++y) {
        for (int x = 0; x < labels.width(); ++x) {
            const int m = stats.index_of(labels(y, x));
            if (m < 0) {
                continue;
            }
            acc += 1.0 - cosine_similarity(pixel_vector(e, y, x), stats.unit_means[m]);
        }
    }
    return acc / static_cast<double>(total);
}

double loss_discrepancy(const InstanceStats& stats) {
    if (stats.size() == 0) {
        return 0.0;
    }
    double acc = 0.0;
    for (std::size_t m = 0; m < stats.size(); ++m) {
        const auto& nb = stats.neighbors[m];
        if (nb.empty()) {
            continue;
        }
        double s = 0.0;
        for (int n : nb) {
            s += cosine_similarity(stats.unit_means[n], stats.unit_means[m]);
        }
        acc += s / static_cast<double>(nb.size());
    }
    return acc / static_cast<double>(stats.size());
}

DiscriminativeLoss discriminative_loss_backward(const Tensor3& e, const LabelMap& labels, double delta,
                                                double tau) {
    const InstanceStats st = instance_stats(e, labels);
    DiscriminativeLoss out;
    out.grad = Tensor3(e.channels(), e.height(), e.width());
    out.concentration = loss_concentration(e, labels, st);
    out.discrepancy = loss_discrepancy(st);
    const std::size_t m_count = st.size();
    if (m_count == 0) {
        return out;
    }
    const auto dims = static_cast<std::size_t>(e.channels());
    std::int64_t total = 0;
    for (auto k : st.counts) {
        total += k;
    }

    // Gradients with respect to the unnormalised instance means. S is scale
    // invariant, so S(e_p, mu_m) = S(e_p, mean_m).
    std::vector<std::vector<double>> grad_mean(m_count, std::vector<double>(dims, 0.0));
    std::vector<double> gp(dims);
    std::vector<double> pv(dims);
    const double con_scale = -delta / static_cast<double>(total);
    for (int y = 0; y < labels.height(); ++y) {
        for (int x = 0; x < labels.width(); ++x) {
            const int m = st.index_of(labels(y, x));
            if (m < 0) {
                continue;
            }
            for (std::size_t d = 0; d < dims; ++d) {
                pv[d] = e(static_cast<int>(d), y, x);
            }
            std::fill(gp.begin(), gp.end(), 0.0);
            cosine_similarity_backward(pv, st.means[m], con_scale, gp, grad_mean[m]);
            for (std::size_t d = 0; d < dims; ++d) {
                out.grad(static_cast<int>(d), y, x) += gp[d];
            }
        }
    }
    for (std::size_t m = 0; m < m_count; ++m) {
        const auto& nb = st.neighbors[m];
        if (nb.empty()) {
            continue;
        }
        const double scale = tau / (static_cast<double>(m_count) * static_cast<double>(nb.size()));
        for (int n : nb) {
            cosine_similarity_backward(st.means[n], st.means[m], scale, grad_mean[n], grad_mean[m]);
        }
    }
    for (int y = 0; y < labels.height(); ++y) {
        for (int x = 0; x < labels.width(); ++x) {
            const int m = st.index_of(labels(y, x));
            if (m < 0) {
                continue;
            }
            const double inv_k = 1.0 / static_cast<double>(st.counts[m]);
            for (std::size_t d = 0; d < dims; ++d) {
                out.grad(static_cast<int>(d), y, x) += grad_mean[m][d] * inv_k;
            }
        }
    }
    return out;
}

double loss_discriminative(const LossComponents& c, const LossWeights& w) {
    return w.delta * c.concentration + w.tau * c.discrepancy;
}

double loss_total(const LossComponents& c, const LossWeights& w) {
    return w.alpha * c.st + w.beta * c.pyramid + w.gamma * loss_discriminative(c, w);
}

} // namespace stde
