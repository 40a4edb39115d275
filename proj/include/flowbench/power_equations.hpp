#pragma once

// AC power-flow kernels shared by the admittance, balance, and solver code.
// Templated on the real scalar so the same expressions can be evaluated in
// extended precision.

#include <complex>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace flowbench {

/// Two-port admittance of one branch: [I_f; I_t] = [ff ft; tf tt] [V_f; V_t].
struct BranchTwoPort {
    std::complex<double> ff{0.0, 0.0};
    std::complex<double> ft{0.0, 0.0};
    std::complex<double> tf{0.0, 0.0};
    std::complex<double> tt{0.0, 0.0};
};

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct BusPower {
    VectorX<Scalar> p;
    VectorX<Scalar> q;
};

template <typename Scalar>
std::complex<Scalar> polar_voltage(Scalar vm, Scalar va) {
    using std::cos;
    using std::sin;
    return {vm * cos(va), vm * sin(va)};
}

/// Complex power leaving each bus into the network, S = V .* conj(Y V).
/// These are the second terms of the nodal balance equations.
template <typename Scalar, typename VmDerived, typename VaDerived>
BusPower<Scalar> bus_power(const Eigen::SparseMatrix<std::complex<double>>& Y,
                           const Eigen::MatrixBase<VmDerived>& vm,
                           const Eigen::MatrixBase<VaDerived>& va) {
    using C = std::complex<Scalar>;
    const Eigen::Index n = Y.rows();
    std::vector<C> v(n), current(n, C(0, 0));
    for (Eigen::Index i = 0; i < n; ++i) v[i] = polar_voltage<Scalar>(Scalar(vm[i]), Scalar(va[i]));
    for (Eigen::Index col = 0; col < Y.outerSize(); ++col)
        for (Eigen::SparseMatrix<std::complex<double>>::InnerIterator it(Y, col); it; ++it)
            current[it.row()] += C(Scalar(it.value().real()), Scalar(it.value().imag())) * v[col];

    BusPower<Scalar> out{VectorX<Scalar>(n), VectorX<Scalar>(n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        C s = v[i] * std::conj(current[i]);
        out.p[i] = s.real();
        out.q[i] = s.imag();
    }
    return out;
}

/// (p_from, q_from, p_to, q_to) for one branch.
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> two_port_flow(const BranchTwoPort& tp, Scalar vm_f, Scalar va_f, Scalar vm_t,
                                          Scalar va_t) {
    using C = std::complex<Scalar>;
    auto cast = [](std::complex<double> z) { return C(Scalar(z.real()), Scalar(z.imag())); };
    const C vf = polar_voltage(vm_f, va_f);
    const C vt = polar_voltage(vm_t, va_t);
    const C sf = vf * std::conj(cast(tp.ff) * vf + cast(tp.ft) * vt);
    const C st = vt * std::conj(cast(tp.tf) * vf + cast(tp.tt) * vt);
    Eigen::Matrix<Scalar, 4, 1> out;
    out << sf.real(), sf.imag(), st.real(), st.imag();
    return out;
}

}  // namespace flowbench
