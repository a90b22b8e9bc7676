#include "dpar/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "dpar/errors.hpp"

namespace dpar {

Eigen::VectorXd MlpParams::flatten() const {
    Eigen::VectorXd flat(n_params());
    long off = 0;
    flat.segment(off, w1.size()) = Eigen::Map<const Eigen::VectorXd>(w1.data(), w1.size());
    off += w1.size();
    flat.segment(off, b1.size()) = b1;
    off += b1.size();
    flat.segment(off, w2.size()) = Eigen::Map<const Eigen::VectorXd>(w2.data(), w2.size());
    off += w2.size();
    flat.segment(off, b2.size()) = b2;
    return flat;
}

MlpParams MlpParams::unflatten(const Eigen::VectorXd& flat, int d, int h, int c) {
    if (flat.size() != static_cast<long>(d) * h + h + static_cast<long>(h) * c + c) {
        throw DimensionError("flat parameter vector does not match (d,h,c)");
    }
    MlpParams p;
    long off = 0;
    p.w1 = Eigen::Map<const Eigen::MatrixXd>(flat.data() + off, d, h);
    off += static_cast<long>(d) * h;
    p.b1 = flat.segment(off, h);
    off += h;
    p.w2 = Eigen::Map<const Eigen::MatrixXd>(flat.data() + off, h, c);
    off += static_cast<long>(h) * c;
    p.b2 = flat.segment(off, c);
    return p;
}

void MlpParams::axpy(double a, const Eigen::VectorXd& flat) {
    if (flat.size() != n_params()) throw DimensionError("update vector size mismatch");
    long off = 0;
    Eigen::Map<Eigen::VectorXd>(w1.data(), w1.size()) += a * flat.segment(off, w1.size());
    off += w1.size();
    b1 += a * flat.segment(off, b1.size());
    off += b1.size();
    Eigen::Map<Eigen::VectorXd>(w2.data(), w2.size()) += a * flat.segment(off, w2.size());
    off += w2.size();
    b2 += a * flat.segment(off, b2.size());
}

MlpParams init_mlp(int d, int h, int c, Rng& rng) {
    if (d <= 0 || h <= 0 || c <= 0) throw ConfigError("model dims must be positive");
    MlpParams p;
    p.w1.resize(d, h);
    p.b1 = Eigen::VectorXd::Zero(h);
    p.w2.resize(h, c);
    p.b2 = Eigen::VectorXd::Zero(c);
    const double s1 = std::sqrt(2.0 / (d + h));
    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < d; ++i) p.w1(i, j) = rng.gaussian(s1);
    }
    const double s2 = std::sqrt(2.0 / (h + c));
    for (int j = 0; j < c; ++j) {
        for (int i = 0; i < h; ++i) p.w2(i, j) = rng.gaussian(s2);
    }
    return p;
}

Eigen::VectorXd forward_encode(const MlpParams& params, const Eigen::VectorXd& x) {
    if (x.size() != params.input_dim()) {
        throw DimensionError("feature dimension mismatch in forward_encode");
    }
    const Eigen::VectorXd pre = params.w1.transpose() * x + params.b1;
    const Eigen::VectorXd act = pre.cwiseMax(0.0);
    return params.w2.transpose() * act + params.b2;
}

Eigen::VectorXd aggregate_representation(const MlpParams& params, const Graph& g,
                                         const ApprVector& appr_row) {
    Eigen::VectorXd agg = Eigen::VectorXd::Zero(params.n_classes());
    for (const auto& [u, w] : appr_row.entries) {
        if (u < 0 || u >= g.n_nodes) throw DimensionError("appr row index out of range");
        agg += w * forward_encode(params, g.features.row(u).transpose());
    }
    return agg;
}

namespace {

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    const double m = logits.maxCoeff();
    Eigen::VectorXd z = (logits.array() - m).exp();
    return z / z.sum();
}

}  // namespace

Eigen::VectorXd predict_node(const MlpParams& params, const Graph& g,
                             const ApprVector& appr_row) {
    return softmax(aggregate_representation(params, g, appr_row));
}

LossGrad loss_and_grad(const MlpParams& params, const Graph& g, int node,
                       const ApprVector& appr_row, int label) {
    const int c = params.n_classes();
    if (label < 0 || label >= c) throw DimensionError("label out of range");

    const Eigen::VectorXd agg = aggregate_representation(params, g, appr_row);
    const double m = agg.maxCoeff();
    const Eigen::ArrayXd shifted = agg.array() - m;
    const double lse = m + std::log(shifted.exp().sum());

    LossGrad out;
    out.loss = lse - agg[label];

    // dL/d(aggregate) = softmax(agg) - e_label, pushed back through each
    // neighbor's forward pass weighted by its row entry.
    Eigen::VectorXd g_s = shifted.exp();
    g_s /= g_s.sum();
    g_s[label] -= 1.0;

    Eigen::MatrixXd gw1 = Eigen::MatrixXd::Zero(params.w1.rows(), params.w1.cols());
    Eigen::VectorXd gb1 = Eigen::VectorXd::Zero(params.b1.size());
    Eigen::MatrixXd gw2 = Eigen::MatrixXd::Zero(params.w2.rows(), params.w2.cols());
    Eigen::VectorXd gb2 = Eigen::VectorXd::Zero(params.b2.size());

    for (const auto& [u, w] : appr_row.entries) {
        const Eigen::VectorXd x = g.features.row(u).transpose();
        const Eigen::VectorXd pre = params.w1.transpose() * x + params.b1;
        const Eigen::VectorXd act = pre.cwiseMax(0.0);
        const Eigen::VectorXd g_out = w * g_s;

        gw2.noalias() += act * g_out.transpose();
        gb2 += g_out;
        Eigen::VectorXd g_act = params.w2 * g_out;
        for (int i = 0; i < g_act.size(); ++i) {
            if (pre[i] <= 0.0) g_act[i] = 0.0;
        }
        gw1.noalias() += x * g_act.transpose();
        gb1 += g_act;
    }

    MlpParams grads;
    grads.w1 = std::move(gw1);
    grads.b1 = std::move(gb1);
    grads.w2 = std::move(gw2);
    grads.b2 = std::move(gb2);
    out.grad.values = grads.flatten();
    out.grad.node = node;
    out.grad.l2_norm = out.grad.values.norm();
    return out;
}

void save_mlp(const MlpParams& params, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw StageError("cannot open '" + path + "' for writing");
    out << "dpar-mlp v1\n";
    out << params.input_dim() << ' ' << params.hidden_dim() << ' ' << params.n_classes()
        << '\n';
    const Eigen::VectorXd flat = params.flatten();
    char buf[40];
    for (long i = 0; i < flat.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", flat[i]);
        out << buf << '\n';
    }
}

MlpParams load_mlp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw StageError("cannot open '" + path + "' for reading");
    std::string magic, version;
    in >> magic >> version;
    if (magic != "dpar-mlp" || version != "v1") {
        throw ParseError(path + ": not a dpar model checkpoint");
    }
    int d = 0, h = 0, c = 0;
    in >> d >> h >> c;
    if (!in || d <= 0 || h <= 0 || c <= 0) throw ParseError(path + ": bad shape header");
    const long total = static_cast<long>(d) * h + h + static_cast<long>(h) * c + c;
    Eigen::VectorXd flat(total);
    for (long i = 0; i < total; ++i) {
        if (!(in >> flat[i])) throw ParseError(path + ": truncated checkpoint");
    }
    return MlpParams::unflatten(flat, d, h, c);
}

}  // namespace dpar
