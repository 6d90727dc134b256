#include "stoprag/qnet.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "stoprag/rng.hpp"

namespace stoprag {

namespace {

HeadParams init_head(int dim, int hidden, Rng& rng) {
    HeadParams h;
    h.w1.resize(static_cast<std::size_t>(hidden) * static_cast<std::size_t>(dim));
    h.b1.assign(static_cast<std::size_t>(hidden), 0.0);
    h.w2.resize(static_cast<std::size_t>(hidden));
    h.b2 = 0.0;
    const double s1 = std::sqrt(2.0 / static_cast<double>(dim));
    const double s2 = std::sqrt(1.0 / static_cast<double>(hidden));
    for (auto& w : h.w1) w = s1 * rng.next_gaussian();
    for (auto& w : h.w2) w = s2 * rng.next_gaussian();
    return h;
}

}  // namespace

QNetworkParams init_params(int dim, int hidden, std::uint64_t seed) {
    if (dim < 1 || hidden < 1) throw std::invalid_argument("init_params: dim and hidden must be >= 1");
    QNetworkParams p;
    p.dim = dim;
    p.hidden = hidden;
    Rng rng(derive_seed(seed, "qnet-init"));
    p.stop = init_head(dim, hidden, rng);
    p.cont = init_head(dim, hidden, rng);
    return p;
}

void zero_head(HeadParams& head) {
    std::fill(head.w1.begin(), head.w1.end(), 0.0);
    std::fill(head.b1.begin(), head.b1.end(), 0.0);
    std::fill(head.w2.begin(), head.w2.end(), 0.0);
    head.b2 = 0.0;
}

std::vector<std::span<double>> param_spans(QNetworkParams& p) {
    return {std::span<double>(p.stop.w1), std::span<double>(p.stop.b1), std::span<double>(p.stop.w2),
            std::span<double>(&p.stop.b2, 1), std::span<double>(p.cont.w1), std::span<double>(p.cont.b1),
            std::span<double>(p.cont.w2), std::span<double>(&p.cont.b2, 1)};
}

std::vector<std::span<const double>> param_spans(const QNetworkParams& p) {
    return {std::span<const double>(p.stop.w1), std::span<const double>(p.stop.b1),
            std::span<const double>(p.stop.w2), std::span<const double>(&p.stop.b2, 1),
            std::span<const double>(p.cont.w1), std::span<const double>(p.cont.b1),
            std::span<const double>(p.cont.w2), std::span<const double>(&p.cont.b2, 1)};
}

double head_forward(const HeadParams& head, const FeatureVector& x, std::vector<double>* hidden) {
    const std::size_t H = head.b1.size();
    const std::size_t D = x.size();
    double out = head.b2;
    if (hidden) hidden->assign(H, 0.0);
    for (std::size_t j = 0; j < H; ++j) {
        const double* row = head.w1.data() + j * D;
        double pre = head.b1[j];
        for (std::size_t i = 0; i < D; ++i) pre += row[i] * x[i];
        double act = pre > 0.0 ? pre : 0.0;
        if (hidden) (*hidden)[j] = act;
        out += head.w2[j] * act;
    }
    return out;
}

ActionValues forward(const QNetworkParams& params, const FeatureVector& x) {
    if (static_cast<int>(x.size()) != params.dim)
        throw std::invalid_argument("forward: feature dimension mismatch");
    return ActionValues{head_forward(params.stop, x, nullptr), head_forward(params.cont, x, nullptr)};
}

double loss(const QNetworkParams& params, const std::vector<const FeatureVector*>& xs,
            const std::vector<TargetPair>& targets) {
    if (xs.empty()) throw std::invalid_argument("loss: empty batch");
    if (xs.size() != targets.size()) throw std::invalid_argument("loss: batch size mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        ActionValues q = forward(params, *xs[i]);
        double ds = targets[i].target_stop - q.q_stop;
        double dc = targets[i].target_cont - q.q_cont;
        total += ds * ds + dc * dc;
    }
    return total;
}

QNetworkGrad::QNetworkGrad(const QNetworkParams& like) {
    g.dim = like.dim;
    g.hidden = like.hidden;
    g.stop.w1.assign(like.stop.w1.size(), 0.0);
    g.stop.b1.assign(like.stop.b1.size(), 0.0);
    g.stop.w2.assign(like.stop.w2.size(), 0.0);
    g.stop.b2 = 0.0;
    g.cont.w1.assign(like.cont.w1.size(), 0.0);
    g.cont.b1.assign(like.cont.b1.size(), 0.0);
    g.cont.w2.assign(like.cont.w2.size(), 0.0);
    g.cont.b2 = 0.0;
}

void QNetworkGrad::zero() {
    for (auto s : param_spans(g))
        for (auto& v : s) v = 0.0;
}

void QNetworkGrad::add(const QNetworkGrad& other) {
    auto a = param_spans(g);
    auto b = param_spans(other.g);
    for (std::size_t k = 0; k < a.size(); ++k)
        for (std::size_t i = 0; i < a[k].size(); ++i) a[k][i] += b[k][i];
}

namespace {

// d/dparams of (target - y)^2 for one head and one input; dy = 2 (y - target).
void head_backward(const HeadParams& head, const FeatureVector& x, const std::vector<double>& hidden,
                   double dy, HeadParams& grad) {
    const std::size_t H = head.b1.size();
    const std::size_t D = x.size();
    grad.b2 += dy;
    for (std::size_t j = 0; j < H; ++j) {
        grad.w2[j] += dy * hidden[j];
        if (hidden[j] > 0.0) {
            double dpre = dy * head.w2[j];
            grad.b1[j] += dpre;
            double* grow = grad.w1.data() + j * D;
            for (std::size_t i = 0; i < D; ++i) grow[i] += dpre * x[i];
        }
    }
}

}  // namespace

QNetworkGrad gradient(const QNetworkParams& params, const std::vector<const FeatureVector*>& xs,
                      const std::vector<TargetPair>& targets) {
    if (xs.empty()) throw std::invalid_argument("gradient: empty batch");
    if (xs.size() != targets.size()) throw std::invalid_argument("gradient: batch size mismatch");
    QNetworkGrad grad(params);
    std::vector<double> hidden;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const FeatureVector& x = *xs[i];
        if (static_cast<int>(x.size()) != params.dim)
            throw std::invalid_argument("gradient: feature dimension mismatch");
        double ys = head_forward(params.stop, x, &hidden);
        head_backward(params.stop, x, hidden, 2.0 * (ys - targets[i].target_stop), grad.g.stop);
        double yc = head_forward(params.cont, x, &hidden);
        head_backward(params.cont, x, hidden, 2.0 * (yc - targets[i].target_cont), grad.g.cont);
    }
    return grad;
}

AdamState::AdamState(const QNetworkParams& like) : m(QNetworkGrad(like).g), v(QNetworkGrad(like).g) {}

void optimizer_step(AdamState& opt, QNetworkParams& params, const QNetworkGrad& grad, double lr,
                    double weight_decay) {
    auto ps = param_spans(params);
    auto gs = param_spans(grad.g);
    auto ms = param_spans(opt.m);
    auto vs = param_spans(opt.v);
    for (std::size_t k = 0; k < ps.size(); ++k)
        if (ps[k].size() != gs[k].size()) throw std::invalid_argument("optimizer_step: shape mismatch");

    opt.step += 1;
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
    for (std::size_t k = 0; k < ps.size(); ++k) {
        for (std::size_t i = 0; i < ps[k].size(); ++i) {
            double g = gs[k][i];
            ms[k][i] = opt.beta1 * ms[k][i] + (1.0 - opt.beta1) * g;
            vs[k][i] = opt.beta2 * vs[k][i] + (1.0 - opt.beta2) * g * g;
            double mhat = ms[k][i] / bc1;
            double vhat = vs[k][i] / bc2;
            ps[k][i] -= lr * (mhat / (std::sqrt(vhat) + opt.eps) + weight_decay * ps[k][i]);
        }
    }
}

double cosine_value(long step, long total, double start, double end) {
    if (total < 1) throw std::out_of_range("cosine_value: total must be >= 1");
    if (step < 0 || step > total) throw std::out_of_range("cosine_value: step outside 0..total");
    double frac = static_cast<double>(step) / static_cast<double>(total);
    return end + (start - end) * (1.0 + std::cos(M_PI * frac)) / 2.0;
}

double LrSchedule::value(long step) const {
    if (step < 0 || step > total) throw std::out_of_range("LrSchedule: step outside 0..total");
    if (warmup_steps > 0 && step < warmup_steps)
        return peak * static_cast<double>(step) / static_cast<double>(warmup_steps);
    long span = total - warmup_steps;
    if (span < 1) return peak;
    return cosine_value(step - warmup_steps, span, peak, 0.0);
}

namespace {

json head_to_json(const HeadParams& h, int dim, int hidden) {
    json w1 = json::array();
    for (int j = 0; j < hidden; ++j) {
        json row = json::array();
        for (int i = 0; i < dim; ++i) row.push_back(h.w1[static_cast<std::size_t>(j) * dim + i]);
        w1.push_back(std::move(row));
    }
    return json{{"W1", w1}, {"b1", h.b1}, {"W2", h.w2}, {"b2", h.b2}};
}

HeadParams head_from_json(const json& j, int dim, int hidden) {
    HeadParams h;
    const json& w1 = j.at("W1");
    if (static_cast<int>(w1.size()) != hidden) throw std::invalid_argument("checkpoint: W1 row count mismatch");
    h.w1.reserve(static_cast<std::size_t>(dim) * hidden);
    for (const auto& row : w1) {
        if (static_cast<int>(row.size()) != dim) throw std::invalid_argument("checkpoint: W1 column count mismatch");
        for (const auto& v : row) h.w1.push_back(v.get<double>());
    }
    h.b1 = j.at("b1").get<std::vector<double>>();
    h.w2 = j.at("W2").get<std::vector<double>>();
    h.b2 = j.at("b2").get<double>();
    if (static_cast<int>(h.b1.size()) != hidden || static_cast<int>(h.w2.size()) != hidden)
        throw std::invalid_argument("checkpoint: head vector size mismatch");
    return h;
}

}  // namespace

json checkpoint_to_json(const QNetworkParams& params, const json& encoder_spec,
                        const json& training_meta) {
    return json{{"version", 1},
                {"encoder_spec", encoder_spec},
                {"D", params.dim},
                {"H", params.hidden},
                {"head_stop", head_to_json(params.stop, params.dim, params.hidden)},
                {"head_cont", head_to_json(params.cont, params.dim, params.hidden)},
                {"training_meta", training_meta}};
}

QNetworkParams checkpoint_from_json(const json& j, json* encoder_spec, json* training_meta) {
    if (j.at("version").get<int>() != 1) throw std::invalid_argument("checkpoint: unsupported version");
    QNetworkParams p;
    p.dim = j.at("D").get<int>();
    p.hidden = j.at("H").get<int>();
    p.stop = head_from_json(j.at("head_stop"), p.dim, p.hidden);
    p.cont = head_from_json(j.at("head_cont"), p.dim, p.hidden);
    if (encoder_spec) *encoder_spec = j.at("encoder_spec");
    if (training_meta) *training_meta = j.at("training_meta");
    return p;
}

void save_checkpoint(const std::string& path, const QNetworkParams& params,
                     const json& encoder_spec, const json& training_meta) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out << checkpoint_to_json(params, encoder_spec, training_meta).dump() << "\n";
}

QNetworkParams load_checkpoint(const std::string& path, json* encoder_spec, json* training_meta) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    json j;
    in >> j;
    return checkpoint_from_json(j, encoder_spec, training_meta);
}

}  // namespace stoprag
