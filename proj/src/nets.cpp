#include "chaos_spde/nets.hpp"

#include <cmath>
#include <stdexcept>

#include "chaos_spde/rng.hpp"

namespace chaos_spde {

Jet Jet::zero(Eigen::Index dim) {
    return Jet{0.0, Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Zero(dim, dim)};
}

JetForm JetForm::zero(Eigen::Index dim) {
    return JetForm{0.0, Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Zero(dim, dim)};
}

JetForm JetForm::evaluation(Eigen::Index dim) {
    JetForm form = zero(dim);
    form.value = 1.0;
    return form;
}

JetForm JetForm::partial(Eigen::Index dim, Eigen::Index l) {
    if (l < 0 || l >= dim) {
        throw std::out_of_range("JetForm::partial: direction outside input dimension");
    }
    JetForm form = zero(dim);
    form.grad(l) = 1.0;
    return form;
}

double JetForm::apply(const Jet& jet) const {
    return value * jet.value + grad.dot(jet.grad) + hess.cwiseProduct(jet.hess).sum();
}

bool JetForm::uses_hessian() const { return hess.size() > 0 && hess.cwiseAbs().maxCoeff() > 0.0; }

std::string to_string(FeatureLaw law) {
    return law == FeatureLaw::uniform_box ? "uniform_box" : "student_t";
}

FeatureLaw parse_feature_law(const std::string& text) {
    if (text == "uniform_box") return FeatureLaw::uniform_box;
    if (text == "student_t") return FeatureLaw::student_t;
    throw std::invalid_argument("unknown feature law '" + text + "'");
}

// ------------------------------------------------------------------ TanhLayer

TanhLayer::TanhLayer(Eigen::Index neurons, Eigen::Index input_dim, Eigen::Index output_dim)
    : time_weights(Eigen::VectorXd::Zero(neurons)),
      space_weights(Eigen::MatrixXd::Zero(neurons, input_dim)),
      biases(Eigen::VectorXd::Zero(neurons)),
      readouts(Eigen::MatrixXd::Zero(neurons, output_dim)) {
    if (neurons < 1 || input_dim < 1 || output_dim < 1) {
        throw std::invalid_argument("TanhLayer: neurons, input and output dimensions must be positive");
    }
}

void TanhLayer::check_input(std::span<const double> u) const {
    if (static_cast<Eigen::Index>(u.size()) != input_dim()) {
        throw std::invalid_argument("net: input has dimension " + std::to_string(u.size()) + ", expected " +
                                    std::to_string(input_dim()));
    }
}

Eigen::VectorXd TanhLayer::preactivation(double t, std::span<const double> u) const {
    check_input(u);
    const Eigen::Map<const Eigen::VectorXd> x(u.data(), static_cast<Eigen::Index>(u.size()));
    return time_weights * t + space_weights * x - biases;
}

bool TanhLayer::all_finite() const {
    return time_weights.allFinite() && space_weights.allFinite() && biases.allFinite() && readouts.allFinite();
}

// ----------------------------------------------------------- net wrappers

DeterministicNet::DeterministicNet(TanhLayer layer) : layer_(std::move(layer)) {}

DeterministicNet::DeterministicNet(Eigen::Index neurons, Eigen::Index input_dim, Eigen::Index output_dim)
    : layer_(neurons, input_dim, output_dim) {}

Eigen::Index DeterministicNet::parameter_count() const {
    const Eigen::Index n = layer_.neurons();
    return n * (2 + layer_.input_dim() + layer_.output_dim());
}

Eigen::VectorXd DeterministicNet::parameters() const {
    const Eigen::Index n = layer_.neurons(), m = layer_.input_dim(), d = layer_.output_dim();
    Eigen::VectorXd flat(parameter_count());
    flat.segment(0, n) = layer_.time_weights;
    for (Eigen::Index k = 0; k < n; ++k) {
        flat.segment(n + k * m, m) = layer_.space_weights.row(k).transpose();
        flat.segment(2 * n + n * m + k * d, d) = layer_.readouts.row(k).transpose();
    }
    flat.segment(n + n * m, n) = layer_.biases;
    return flat;
}

void DeterministicNet::set_parameters(const Eigen::VectorXd& flat) {
    if (flat.size() != parameter_count()) {
        throw std::invalid_argument("DeterministicNet: parameter vector has wrong length");
    }
    const Eigen::Index n = layer_.neurons(), m = layer_.input_dim(), d = layer_.output_dim();
    layer_.time_weights = flat.segment(0, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        layer_.space_weights.row(k) = flat.segment(n + k * m, m).transpose();
        layer_.readouts.row(k) = flat.segment(2 * n + n * m + k * d, d).transpose();
    }
    layer_.biases = flat.segment(n + n * m, n);
}

RandomFeatureNet::RandomFeatureNet(TanhLayer layer, FeatureLaw law, std::uint64_t seed, double box_radius)
    : layer_(std::move(layer)), law_(law), seed_(seed), box_radius_(box_radius) {}

void RandomFeatureNet::set_readouts(const Eigen::MatrixXd& readouts) {
    if (readouts.rows() != layer_.readouts.rows() || readouts.cols() != layer_.readouts.cols()) {
        throw std::invalid_argument("RandomFeatureNet: readout shape mismatch");
    }
    layer_.readouts = readouts;
}

// -------------------------------------------------------------- evaluation

double tanh_d1(double s) { return 1.0 - s * s; }
double tanh_d2(double s) { return -2.0 * s * (1.0 - s * s); }
double tanh_d3(double s) { return -2.0 * (1.0 - s * s) * (1.0 - 3.0 * s * s); }

Eigen::VectorXd net_eval(const TanhLayer& net, double t, std::span<const double> u) {
    const Eigen::VectorXd act = net.preactivation(t, u).array().tanh();
    return net.readouts.transpose() * act;
}

Eigen::MatrixXd net_grad_u(const TanhLayer& net, double t, std::span<const double> u) {
    const Eigen::ArrayXd s = net.preactivation(t, u).array().tanh();
    const Eigen::VectorXd d1 = 1.0 - s.square();
    // sum_n y_n rho'(z_n) a1_n^T
    return net.readouts.transpose() * d1.asDiagonal() * net.space_weights;
}

Eigen::MatrixXd net_hess_diag_u(const TanhLayer& net, double t, std::span<const double> u) {
    const Eigen::ArrayXd s = net.preactivation(t, u).array().tanh();
    const Eigen::VectorXd d2 = -2.0 * s * (1.0 - s.square());
    const Eigen::MatrixXd a_sq = net.space_weights.array().square().matrix();
    return net.readouts.transpose() * d2.asDiagonal() * a_sq;
}

Jet net_jet(const TanhLayer& net, double t, std::span<const double> u, Eigen::Index channel) {
    if (channel < 0 || channel >= net.output_dim()) {
        throw std::out_of_range("net_jet: output channel out of range");
    }
    const Eigen::ArrayXd s = net.preactivation(t, u).array().tanh();
    const Eigen::ArrayXd y = net.readouts.col(channel).array();
    const Eigen::VectorXd w1 = (y * (1.0 - s.square())).matrix();
    const Eigen::VectorXd w2 = (y * (-2.0 * s * (1.0 - s.square()))).matrix();
    Jet jet;
    jet.value = (y * s).sum();
    jet.grad = net.space_weights.transpose() * w1;
    jet.hess = net.space_weights.transpose() * w2.asDiagonal() * net.space_weights;
    return jet;
}

Eigen::VectorXd feature_response(const TanhLayer& net, double t, std::span<const double> u,
                                 const JetForm& form) {
    const Eigen::ArrayXd s = net.preactivation(t, u).array().tanh();
    Eigen::ArrayXd out = form.value * s;
    const Eigen::ArrayXd g = (net.space_weights * form.grad).array();
    out += (1.0 - s.square()) * g;
    if (form.uses_hessian()) {
        const Eigen::ArrayXd h = (net.space_weights * form.hess).cwiseProduct(net.space_weights).rowwise().sum().array();
        out += -2.0 * s * (1.0 - s.square()) * h;
    }
    return out.matrix();
}

void accumulate_parameter_gradient(const TanhLayer& net, double t, std::span<const double> u,
                                   const JetForm& form, Eigen::Index channel, double weight,
                                   Eigen::Ref<Eigen::VectorXd> grad) {
    const Eigen::Index n = net.neurons(), m = net.input_dim(), d = net.output_dim();
    if (grad.size() != n * (2 + m + d)) {
        throw std::invalid_argument("accumulate_parameter_gradient: gradient buffer has wrong length");
    }
    const Eigen::VectorXd z = net.preactivation(t, u);
    const Eigen::Map<const Eigen::VectorXd> x(u.data(), m);
    const bool second = form.uses_hessian();
    const Eigen::MatrixXd hess_sym = second ? Eigen::MatrixXd(form.hess + form.hess.transpose())
                                            : Eigen::MatrixXd();
    for (Eigen::Index k = 0; k < n; ++k) {
        const double s = std::tanh(z(k));
        const double s1 = tanh_d1(s), s2 = tanh_d2(s), s3 = tanh_d3(s);
        const auto a = net.space_weights.row(k).transpose();
        const double g = form.grad.dot(a);
        const double h = second ? a.dot(form.hess * a) : 0.0;
        const double y = net.readouts(k, channel);

        const double response = form.value * s + s1 * g + s2 * h;
        const double dz = weight * y * (form.value * s1 + s2 * g + s3 * h);

        grad(k) += dz * t;
        for (Eigen::Index l = 0; l < m; ++l) {
            double da = dz * x(l) + weight * y * s1 * form.grad(l);
            if (second) {
                da += weight * y * s2 * hess_sym.row(l).dot(a);
            }
            grad(n + k * m + l) += da;
        }
        grad(n + n * m + k) -= dz;
        grad(2 * n + n * m + k * d + channel) += weight * response;
    }
}

Eigen::VectorXd net_parameter_gradient(const DeterministicNet& net, double t, std::span<const double> u,
                                       Eigen::Index channel) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.parameter_count());
    accumulate_parameter_gradient(net.layer(), t, u, JetForm::evaluation(net.layer().input_dim()), channel, 1.0,
                                  grad);
    return grad;
}

// ---------------------------------------------------------------- sampling

RandomFeatureNet sample_random_net(Eigen::Index neurons, Eigen::Index input_dim, Eigen::Index output_dim,
                                   std::uint64_t seed, FeatureLaw law, double box_radius) {
    if (law == FeatureLaw::uniform_box && !(box_radius > 0.0)) {
        throw std::invalid_argument("sample_random_net: box radius must be positive");
    }
    TanhLayer layer(neurons, input_dim, output_dim);
    CounterStream rng(seed);
    for (Eigen::Index k = 0; k < neurons; ++k) {
        if (law == FeatureLaw::uniform_box) {
            layer.time_weights(k) = rng.uniform(-box_radius, box_radius);
            for (Eigen::Index l = 0; l < input_dim; ++l) {
                layer.space_weights(k, l) = rng.uniform(-box_radius, box_radius);
            }
            layer.biases(k) = rng.uniform(-box_radius, box_radius);
        } else {
            // Multivariate t_1 on the time-extended input: Gaussian vector over |N(0,1)|.
            const double scale = std::abs(rng.normal());
            layer.time_weights(k) = rng.normal() / scale;
            for (Eigen::Index l = 0; l < input_dim; ++l) {
                layer.space_weights(k, l) = rng.normal() / scale;
            }
            layer.biases(k) = rng.normal() / std::abs(rng.normal());
        }
    }
    return RandomFeatureNet(std::move(layer), law, seed, box_radius);
}

DeterministicNet init_deterministic_net(Eigen::Index neurons, Eigen::Index input_dim, Eigen::Index output_dim,
                                        std::uint64_t seed) {
    DeterministicNet net(neurons, input_dim, output_dim);
    TanhLayer& layer = net.layer();
    CounterStream rng(seed);
    const double inner = 1.0 / std::sqrt(static_cast<double>(input_dim));
    const double outer = 1.0 / static_cast<double>(neurons);
    for (Eigen::Index k = 0; k < neurons; ++k) {
        layer.time_weights(k) = inner * rng.uniform(-1.0, 1.0);
        for (Eigen::Index l = 0; l < input_dim; ++l) {
            layer.space_weights(k, l) = inner * rng.uniform(-1.0, 1.0);
        }
        layer.biases(k) = inner * rng.uniform(-1.0, 1.0);
        for (Eigen::Index c = 0; c < output_dim; ++c) {
            layer.readouts(k, c) = outer * rng.uniform(-1.0, 1.0);
        }
    }
    return net;
}

}  // namespace chaos_spde
