#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ner/dynamics.hpp"
#include "ner/hamiltonian.hpp"

using namespace ner;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

NucleusParams make_nucleus(int two_s, double q = 1e-28, double gamma = 1e7) {
  NucleusParams n;
  n.s = SpinQuantum{two_s};
  n.q_moment_m2 = (two_s == 1) ? 0.0 : q;
  n.gamma_n = gamma;
  return n;
}

Matrix traceless(const Matrix& m) {
  return m - (m.trace() / static_cast<double>(m.rows())) * Matrix::Identity(m.rows(), m.cols());
}

}  // namespace

TEST_CASE("nucleus parameter validation and coupling", "[hamiltonian]") {
  const auto& pc = codata();
  SECTION("spin 1/2 must carry zero quadrupole moment") {
    NucleusParams bad;
    bad.s = SpinQuantum{1};
    bad.q_moment_m2 = 1e-28;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    CHECK(make_nucleus(1).quad_coupling() == 0.0);
  }
  SECTION("coupling matches e Q / (2S(2S-1) hbar)") {
    const NucleusParams n = make_nucleus(3, 2e-28);
    // oracle: S = 3/2 -> 2S(2S-1) = 6
    CHECK_THAT(n.quad_coupling(), WithinRel(pc.e_charge * 2e-28 / (6.0 * pc.hbar), 1e-14));
  }
}

TEST_CASE("quadrupole term for an axial tensor reduces to the sz^2 form", "[hamiltonian]") {
  const auto& pc = codata();
  const NucleusParams nuc = make_nucleus(3);
  const SpinOperators ops = make_spin_operators(nuc.s);
  const double c = 2.7e21;
  EfgTensor g = EfgTensor::Zero();
  g(0, 0) = g(1, 1) = c;
  g(2, 2) = -2.0 * c;

  const Matrix h = h_quadrupole(nuc, ops, g, pc);
  // oracle: algebraic expansion gives 3 qc C (sz^2 - S(S+1)/3 I)
  const double qc = nuc.quad_coupling(pc);
  const double sv = nuc.s.value();
  const Matrix expect =
      3.0 * qc * c *
      (ops.sz * ops.sz - sv * (sv + 1.0) / 3.0 * Matrix::Identity(ops.s.dim(), ops.s.dim()));
  CHECK((h - expect).cwiseAbs().maxCoeff() < 1e-12 * expect.cwiseAbs().maxCoeff());

  SECTION("zero tensor gives the zero matrix") {
    CHECK(h_quadrupole(nuc, ops, EfgTensor::Zero(), pc).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("spin 1/2 gives the zero matrix for any tensor") {
    const NucleusParams half = make_nucleus(1);
    const SpinOperators hops = make_spin_operators(half.s);
    CHECK(h_quadrupole(half, hops, g, pc).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("hermitian for a generic symmetric traceless tensor") {
    EfgTensor gen;
    gen << 1.0, 0.3, -0.8, 0.3, -2.5, 0.9, -0.8, 0.9, 1.5;
    const Matrix hq = h_quadrupole(nuc, ops, gen, pc);
    CHECK((hq - hq.adjoint()).cwiseAbs().maxCoeff() < 1e-12 * hq.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("total Hamiltonian combines Zeeman ladder and quadrupole term", "[hamiltonian]") {
  const auto& pc = codata();
  const NucleusParams nuc = make_nucleus(3, 1e-28, 2.2e7);
  const SpinOperators ops = make_spin_operators(nuc.s);
  const double b0 = 0.8;

  SECTION("pure Zeeman is diag(gamma B0 m)") {
    const Matrix h = h_total(nuc, ops, RealVector3(0.0, 0.0, b0), EfgTensor::Zero(), pc);
    for (int i = 0; i < nuc.s.dim(); ++i) {
      CHECK_THAT(h(i, i).real(), WithinRel(nuc.gamma_n * b0 * nuc.s.m_of_row(i), 1e-14));
    }
  }
  SECTION("zero field reduces to the quadrupole term") {
    EfgTensor g = EfgTensor::Zero();
    g(0, 0) = g(1, 1) = 1e21;
    g(2, 2) = -2e21;
    const Matrix h = h_total(nuc, ops, RealVector3::Zero(), g, pc);
    CHECK((h - h_quadrupole(nuc, ops, g, pc)).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("top gap from dense diagonalization") {
    const double c = 3e21;
    EfgTensor g = EfgTensor::Zero();
    g(0, 0) = g(1, 1) = c;
    g(2, 2) = -2.0 * c;
    const Matrix h = h_total(nuc, ops, RealVector3(0.0, 0.0, b0), g, pc);
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    // identify each eigenvalue's m by its eigenvector's dominant component
    std::vector<double> energy_of_m(nuc.s.dim(), 0.0);
    for (int k = 0; k < nuc.s.dim(); ++k) {
      int row = 0;
      es.eigenvectors().col(k).cwiseAbs().maxCoeff(&row);
      energy_of_m[row] = es.eigenvalues()(k);
    }
    const double gap = energy_of_m[0] - energy_of_m[1];  // m = 3/2 minus m = 1/2
    const double oracle = nuc.gamma_n * b0 + 6.0 * nuc.quad_coupling(pc) * c;
    CHECK_THAT(gap, WithinRel(oracle, 1e-12));
  }
  SECTION("transverse field keeps hermiticity") {
    const Matrix h = h_total(nuc, ops, RealVector3(0.3, -0.4, 0.5), EfgTensor::Zero(), pc);
    CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-12 * h.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("oscillating-drive Hamiltonian structure", "[hamiltonian]") {
  const auto& pc = codata();
  const NucleusParams nuc = make_nucleus(3);
  const SpinOperators ops = make_spin_operators(nuc.s);
  const EfgCoefficients coeffs{8e19, 0.0, 5e20, 0.0};
  DriveParams drive;
  drive.e_amp = 2e-3;
  drive.omega = nuc.gamma_n * 0.5;
  drive.phi = 0.0;
  drive.b0 = 0.5;

  const HamiltonianModel model = h_ner(nuc, ops, coeffs, drive, pc);
  const double qc = nuc.quad_coupling(pc);
  const Matrix h_static =
      nuc.gamma_n * drive.b0 * ops.sz + 3.0 * qc * coeffs.c * ops.sz * ops.sz;

  SECTION("at t = 0 with phi = 0 the drive is the {sx,sz} term only") {
    const Matrix drive_part = model.eval(0.0) - h_static;
    const Matrix expect = 3.0 * qc * coeffs.a * drive.e_amp * anticommutator(ops.sx, ops.sz);
    CHECK((drive_part - expect).cwiseAbs().maxCoeff() < 1e-12 * expect.cwiseAbs().maxCoeff());
  }
  SECTION("eval(t) is the frame-rotated t = 0 generator plus the Zeeman term") {
    const Matrix gen = ner_rotating_generator(nuc, ops, coeffs, drive, pc);
    for (double t : {1.7e-8, 3.1e-7, 2.9e-6}) {
      const Matrix r = frame_rotation(ops, drive.omega, t);
      const Matrix expect = r * gen * r.adjoint() + nuc.gamma_n * drive.b0 * ops.sz;
      const Matrix got = model.eval(t);
      CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-12 * got.cwiseAbs().maxCoeff());
    }
  }
  SECTION("hermitian at sampled times") {
    for (double t : {0.0, 1.1e-7, 7.7e-7}) {
      const Matrix h = model.eval(t);
      CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-12 * h.cwiseAbs().maxCoeff());
    }
  }
  SECTION("zero amplitude gives a time-independent diagonal model") {
    DriveParams off = drive;
    off.e_amp = 0.0;
    const HamiltonianModel quiet = h_ner(nuc, ops, coeffs, off, pc);
    CHECK((quiet.eval(0.0) - quiet.eval(3.3e-6)).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("spin 1/2 yields a drive-free model with a warning flag") {
    const NucleusParams half = make_nucleus(1);
    const SpinOperators hops = make_spin_operators(half.s);
    const HamiltonianModel m = h_ner(half, hops, coeffs, drive, pc);
    CHECK(m.drive_vanishes);
    const Matrix expect = half.gamma_n * drive.b0 * hops.sz;
    CHECK((m.eval(1e-7) - expect).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("static field is rejected here") {
    DriveParams with_static = drive;
    with_static.e0_static = 10.0;
    CHECK_THROWS_AS(h_ner(nuc, ops, coeffs, with_static, pc), std::invalid_argument);
  }
  SECTION("kept integration constants shift the drive by its t = 0 value") {
    DriveParams dc = drive;
    dc.phi = 0.9;
    dc.keep_dc_terms = true;
    DriveParams nodc = dc;
    nodc.keep_dc_terms = false;
    const HamiltonianModel m_dc = h_ner(nuc, ops, coeffs, dc, pc);
    const HamiltonianModel m_nodc = h_ner(nuc, ops, coeffs, nodc, pc);
    // with the constants kept, the integrated field vanishes at t = 0
    CHECK((m_dc.eval(0.0) - h_static).cwiseAbs().maxCoeff() <
          1e-12 * h_static.cwiseAbs().maxCoeff());
    const Matrix diff = m_nodc.eval(0.4e-6) - m_dc.eval(0.4e-6);
    const Matrix expect = 3.0 * qc * coeffs.a * drive.e_amp *
                          (std::cos(dc.phi) * anticommutator(ops.sx, ops.sz) +
                           std::sin(dc.phi) * anticommutator(ops.sy, ops.sz));
    CHECK((diff - expect).cwiseAbs().maxCoeff() < 1e-12 * expect.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("static-field level Hamiltonian", "[hamiltonian]") {
  const auto& pc = codata();
  const NucleusParams nuc = make_nucleus(7, 3e-29, 5.5e7);
  const SpinOperators ops = make_spin_operators(nuc.s);
  const EfgCoefficients coeffs{0.0, 0.0, 9e20, 4e19};
  const double b0 = 1.0;
  const double qc = nuc.quad_coupling(pc);

  SECTION("zero field keeps only the natural splitting") {
    const Matrix h = h_lqse(nuc, ops, coeffs, 0.0, b0, pc);
    const Matrix expect = nuc.gamma_n * b0 * ops.sz + 3.0 * qc * coeffs.c * ops.sz * ops.sz;
    CHECK((h - expect).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("gap between m and m+1 is gamma B0 + 3 qc (C + B' E0)(2m + 1)") {
    const double e0 = 2.5e4;
    const Matrix h = h_lqse(nuc, ops, coeffs, e0, b0, pc);
    for (int i = 1; i < nuc.s.dim(); ++i) {
      const double m = nuc.s.m_of_row(i);
      const double gap = (h(i - 1, i - 1) - h(i, i)).real();
      const double oracle =
          nuc.gamma_n * b0 + 3.0 * qc * (coeffs.c + coeffs.b_prime * e0) * (2.0 * m + 1.0);
      CHECK_THAT(gap, WithinRel(oracle, 1e-12));
    }
  }
  SECTION("B' E0 = -C cancels all quadrupole splittings") {
    const double e0 = -coeffs.c / coeffs.b_prime;
    const Matrix h = h_lqse(nuc, ops, coeffs, e0, b0, pc);
    const Matrix zeeman = nuc.gamma_n * b0 * ops.sz;
    CHECK((h - zeeman).cwiseAbs().maxCoeff() < 1e-9 * zeeman.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("combined drive Hamiltonian", "[hamiltonian]") {
  const auto& pc = codata();
  const NucleusParams nuc = make_nucleus(7, 3e-29, 5.5e7);
  const SpinOperators ops = make_spin_operators(nuc.s);
  const EfgCoefficients coeffs{8e19, 0.0, 9e20, 4e19};
  DriveParams drive;
  drive.e_amp = 6.4e-4;
  drive.omega = resonance_omega_single(nuc, coeffs, 0.0, 1.0, pc);
  drive.phi = 0.3;
  drive.b0 = 1.0;

  SECTION("no static field reproduces the pure oscillating model") {
    const HamiltonianModel a = h_single(nuc, ops, coeffs, drive, pc);
    const HamiltonianModel b = h_ner(nuc, ops, coeffs, drive, pc);
    for (double t : {0.0, 2.2e-7, 9.9e-7}) {
      CHECK((a.eval(t) - b.eval(t)).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  SECTION("no drive amplitude reproduces the static-field levels") {
    DriveParams quiet = drive;
    quiet.e_amp = 0.0;
    quiet.e0_static = 1.7e4;
    const HamiltonianModel m = h_single(nuc, ops, coeffs, quiet, pc);
    const Matrix expect = h_lqse(nuc, ops, coeffs, quiet.e0_static, quiet.b0, pc);
    CHECK((m.eval(5e-7) - expect).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("hermiticity on a time grid") {
    DriveParams full = drive;
    full.e0_static = 3e3;
    full.omega = resonance_omega_single(nuc, coeffs, full.e0_static, full.b0, pc);
    const HamiltonianModel m = h_single(nuc, ops, coeffs, full, pc);
    for (int i = 0; i < 7; ++i) {
      const Matrix h = m.eval(i * 3.7e-7);
      CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-12 * h.cwiseAbs().maxCoeff());
    }
  }
  SECTION("qubit-subspace block matches the projected two-level form") {
    DriveParams full = drive;
    full.e0_static = 3e3;
    full.omega = resonance_omega_single(nuc, coeffs, full.e0_static, full.b0, pc);
    const HamiltonianModel m = h_single(nuc, ops, coeffs, full, pc);
    const SpinOperators half = make_spin_operators(SpinQuantum{1});
    const double two_s = nuc.s.two_s;
    const double rabi = 3.0 * std::sqrt(two_s) * (two_s - 1.0) * nuc.quad_coupling(pc) *
                        coeffs.a * full.e_amp;
    for (double t : {0.0, 1.3e-7, 6.1e-7}) {
      const Matrix block = m.eval(t).topLeftCorner(2, 2);
      const Matrix expect =
          full.omega * half.sz + rabi * (std::cos(full.omega * t + full.phi) * half.sx +
                                         std::sin(full.omega * t + full.phi) * half.sy);
      CHECK((traceless(block) - traceless(expect)).cwiseAbs().maxCoeff() <
            1e-12 * expect.cwiseAbs().maxCoeff());
    }
  }
}

TEST_CASE("two-nucleus Hamiltonian", "[hamiltonian]") {
  const auto& pc = codata();
  TwoQubitParams p;
  p.nucleus1 = make_nucleus(3, 1e-28, 1e7);
  p.nucleus2 = make_nucleus(3, 1.4e-28, 1.6e7);
  p.c1 = 4e20;
  p.c2 = 3e20;
  p.b_prime1 = 5e19;
  p.b_prime2 = 6e19;
  p.e1 = 1e3;
  p.e2 = 2e3;
  p.b0 = 0.4;
  p.j_schedule.segments = {{0.01, 25.0}};

  SECTION("diagonal with separable J = 0, E = 0 limit") {
    TwoQubitParams q = p;
    q.e1 = q.e2 = 0.0;
    q.j_schedule.segments.clear();
    const Matrix h = h_two(q, 0.0, pc);
    const SpinOperators ops = make_spin_operators(q.nucleus1.s);
    const Matrix id = Matrix::Identity(4, 4);
    const EfgCoefficients k1{0.0, 0.0, q.c1, q.b_prime1};
    const EfgCoefficients k2{0.0, 0.0, q.c2, q.b_prime2};
    const Matrix expect = two_spin_embed(h_lqse(q.nucleus1, ops, k1, 0.0, q.b0, pc), id) +
                          two_spin_embed(id, h_lqse(q.nucleus2, ops, k2, 0.0, q.b0, pc));
    CHECK((h - expect).cwiseAbs().maxCoeff() < 1e-12 * expect.cwiseAbs().maxCoeff());
  }
  SECTION("off-diagonal entries are exactly zero") {
    const Matrix h = h_two(p, 0.005, pc);
    for (int i = 0; i < h.rows(); ++i) {
      for (int j = 0; j < h.cols(); ++j) {
        if (i != j) CHECK(std::abs(h(i, j)) == 0.0);
      }
    }
  }
  SECTION("spin-1/2 pair J term has eigenvalues +-2 pi J / 4") {
    TwoQubitParams toy;
    toy.nucleus1 = make_nucleus(1, 0.0, 0.0);
    toy.nucleus2 = make_nucleus(1, 0.0, 0.0);
    toy.j_schedule.segments = {{1.0, 40.0}};
    const Matrix h = h_two(toy, 0.5, pc);
    const double expect = 2.0 * M_PI * 40.0 / 4.0;
    CHECK_THAT(h(0, 0).real(), WithinRel(expect, 1e-14));
    CHECK_THAT(h(1, 1).real(), WithinRel(-expect, 1e-14));
    CHECK_THAT(h(2, 2).real(), WithinRel(-expect, 1e-14));
    CHECK_THAT(h(3, 3).real(), WithinRel(expect, 1e-14));
  }
  SECTION("mismatched spins are rejected") {
    TwoQubitParams bad = p;
    bad.nucleus2 = make_nucleus(5);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }
}

TEST_CASE("resonance frequency of the top transition", "[hamiltonian]") {
  const auto& pc = codata();
  SECTION("bare Larmor frequency without quadrupole terms") {
    const NucleusParams nuc = make_nucleus(3, 1e-28, 3e7);
    CHECK_THAT(resonance_omega_single(nuc, {0.0, 0.0, 0.0, 0.0}, 0.0, 0.9, pc),
               WithinRel(3e7 * 0.9, 1e-14));
  }
  SECTION("matches the diagonal gap of the level Hamiltonian exactly") {
    const NucleusParams nuc = make_nucleus(7, 3e-29, 5.5e7);
    const SpinOperators ops = make_spin_operators(nuc.s);
    const EfgCoefficients coeffs{0.0, 0.0, 9e20, 4e19};
    const double e0 = 1.3e4, b0 = 1.0;
    const Matrix h = h_lqse(nuc, ops, coeffs, e0, b0, pc);
    const double gap = (h(0, 0) - h(1, 1)).real();
    CHECK(resonance_omega_single(nuc, coeffs, e0, b0, pc) == gap);
  }
  SECTION("quadrupole offsets scale as 2S - 1 at equal couplings") {
    // pick Q values so the coupling qc is identical for both spins
    const auto& c = codata();
    NucleusParams n3 = make_nucleus(3, 1e-28, 0.0);
    // qc ~ Q / (2S(2S-1)): S=3/2 divisor 6, S=7/2 divisor 42
    NucleusParams n7 = make_nucleus(7, 7e-28, 0.0);
    CHECK_THAT(n7.quad_coupling(c), WithinRel(n3.quad_coupling(c), 1e-14));
    const EfgCoefficients coeffs{0.0, 0.0, 5e20, 0.0};
    const double w3 = resonance_omega_single(n3, coeffs, 0.0, 0.0, c);
    const double w7 = resonance_omega_single(n7, coeffs, 0.0, 0.0, c);
    CHECK_THAT(w7 / w3, WithinRel(3.0, 1e-12));  // (2S-1) ratio 6:2
  }
}

TEST_CASE("piecewise-constant schedules", "[hamiltonian]") {
  PiecewiseConstant s;
  s.segments = {{1.0, 2.0}, {0.5, -4.0}, {2.0, 1.0}};
  CHECK(s.value_at(0.5) == 2.0);
  CHECK(s.value_at(1.2) == -4.0);
  CHECK(s.value_at(2.0) == 1.0);
  CHECK(s.value_at(10.0) == 0.0);
  CHECK_THAT(s.integral(1.5), WithinAbs(0.0, 1e-15));       // 1.0*2.0 + 0.5*(-4.0)
  CHECK_THAT(s.integral(3.5), WithinAbs(2.0, 1e-15));       // plus 2.0*1.0
  CHECK(s.total_duration() == 3.5);
  CHECK(s.edges() == std::vector<double>{1.0, 1.5, 3.5});
}
