#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include <Eigen/Dense>

namespace chaos_spde {

/// Value, spatial gradient and spatial Hessian of one scalar output at a point (t, u).
struct Jet {
    double value = 0.0;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;

    static Jet zero(Eigen::Index dim);
};

/// Linear functional on jets: form(jet) = value*jet.value + <grad, jet.grad> + <hess, jet.hess>_F.
/// Pointwise derivatives and the differential operators of the shipped problems are all of
/// this shape, so the losses only ever see JetForms.
struct JetForm {
    double value = 0.0;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;

    static JetForm zero(Eigen::Index dim);
    /// Point evaluation (beta = 0).
    static JetForm evaluation(Eigen::Index dim);
    /// d/du_l.
    static JetForm partial(Eigen::Index dim, Eigen::Index l);

    double apply(const Jet& jet) const;
    bool uses_hessian() const;
};

enum class FeatureLaw { uniform_box, student_t };

std::string to_string(FeatureLaw law);
FeatureLaw parse_feature_law(const std::string& text);

/// phi(t, u) = sum_n y_n tanh(a0_n t + a1_n^T u - b_n), the common body of both net kinds.
struct TanhLayer {
    Eigen::VectorXd time_weights;   // a0, N
    Eigen::MatrixXd space_weights;  // a1, N x m
    Eigen::VectorXd biases;         // b, N
    Eigen::MatrixXd readouts;       // y, N x d

    TanhLayer() = default;
    TanhLayer(Eigen::Index neurons, Eigen::Index input_dim, Eigen::Index output_dim);

    Eigen::Index neurons() const { return time_weights.size(); }
    Eigen::Index input_dim() const { return space_weights.cols(); }
    Eigen::Index output_dim() const { return readouts.cols(); }

    /// Hidden pre-activations a0 t + a1 u - b.
    Eigen::VectorXd preactivation(double t, std::span<const double> u) const;
    void check_input(std::span<const double> u) const;
    bool all_finite() const;
};

/// Deterministic network: every parameter is trainable.
class DeterministicNet {
public:
    DeterministicNet() = default;
    explicit DeterministicNet(TanhLayer layer);
    DeterministicNet(Eigen::Index neurons, Eigen::Index input_dim, Eigen::Index output_dim);

    const TanhLayer& layer() const { return layer_; }
    TanhLayer& layer() { return layer_; }

    /// Parameters flattened as [a0 (N), a1 (N x m, row-major), b (N), y (N x d, row-major)].
    Eigen::Index parameter_count() const;
    Eigen::VectorXd parameters() const;
    void set_parameters(const Eigen::VectorXd& flat);

private:
    TanhLayer layer_;
};

/// Random-feature network: inner weights and biases are sampled once and frozen,
/// only the readouts can change.
class RandomFeatureNet {
public:
    RandomFeatureNet() = default;
    RandomFeatureNet(TanhLayer layer, FeatureLaw law, std::uint64_t seed, double box_radius);

    const TanhLayer& layer() const { return layer_; }
    const Eigen::MatrixXd& readouts() const { return layer_.readouts; }
    void set_readouts(const Eigen::MatrixXd& readouts);

    FeatureLaw law() const { return law_; }
    std::uint64_t seed() const { return seed_; }
    double box_radius() const { return box_radius_; }

private:
    TanhLayer layer_;
    FeatureLaw law_ = FeatureLaw::uniform_box;
    std::uint64_t seed_ = 0;
    double box_radius_ = 2.0;
};

double tanh_d1(double s);  // derivatives of tanh expressed through s = tanh(z)
double tanh_d2(double s);
double tanh_d3(double s);

Eigen::VectorXd net_eval(const TanhLayer& net, double t, std::span<const double> u);
/// d x m matrix of first spatial derivatives.
Eigen::MatrixXd net_grad_u(const TanhLayer& net, double t, std::span<const double> u);
/// d x m matrix of pure second spatial derivatives.
Eigen::MatrixXd net_hess_diag_u(const TanhLayer& net, double t, std::span<const double> u);
/// Full jet of output channel c.
Jet net_jet(const TanhLayer& net, double t, std::span<const double> u, Eigen::Index channel = 0);

template <class Net>
Eigen::VectorXd net_eval(const Net& net, double t, std::span<const double> u) {
    return net_eval(net.layer(), t, u);
}
template <class Net>
Eigen::MatrixXd net_grad_u(const Net& net, double t, std::span<const double> u) {
    return net_grad_u(net.layer(), t, u);
}
template <class Net>
Eigen::MatrixXd net_hess_diag_u(const Net& net, double t, std::span<const double> u) {
    return net_hess_diag_u(net.layer(), t, u);
}

/// form(jet of tanh(z_n)) for every hidden unit n, i.e. the response of each feature with unit
/// readout. The output channel value form(jet_c) equals readouts.col(c).dot(result).
Eigen::VectorXd feature_response(const TanhLayer& net, double t, std::span<const double> u,
                                 const JetForm& form);

/// Accumulates weight * d form(jet_c) / d theta into `grad` (DeterministicNet layout).
void accumulate_parameter_gradient(const TanhLayer& net, double t, std::span<const double> u,
                                   const JetForm& form, Eigen::Index channel, double weight,
                                   Eigen::Ref<Eigen::VectorXd> grad);

/// d net_eval(t,u)_c / d theta for every parameter (DeterministicNet layout).
Eigen::VectorXd net_parameter_gradient(const DeterministicNet& net, double t, std::span<const double> u,
                                       Eigen::Index channel = 0);

/// Inner parameters drawn i.i.d. from `law`; readouts start at zero.
/// uniform_box: (a0, a1, b) ~ U[-R, R]^{m+2}.
/// student_t:   (a0, a1) ~ multivariate t with one degree of freedom on R^{m+1}, b ~ t_1.
RandomFeatureNet sample_random_net(Eigen::Index neurons, Eigen::Index input_dim, Eigen::Index output_dim,
                                   std::uint64_t seed, FeatureLaw law, double box_radius = 2.0);

/// Initial deterministic net: inner parameters U[-1,1]/sqrt(m), readouts U[-1,1]/N.
DeterministicNet init_deterministic_net(Eigen::Index neurons, Eigen::Index input_dim, Eigen::Index output_dim,
                                        std::uint64_t seed);

}  // namespace chaos_spde
