#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "bbm/errors.hpp"
#include "bbm/io.hpp"
#include "bbm/numerics.hpp"
#include "bbm/parallel.hpp"
#include "bbm/rng.hpp"

using namespace bbm;

TEST_CASE("philox known answers") {
  using rng::Block;
  CHECK(rng::philox4x32_10({0, 0, 0, 0}, {0, 0}) == Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(rng::philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(rng::philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("stream normals have unit moments") {
  const rng::Stream s(123, 4);
  double m = 0, v = 0, k = 0;
  const std::size_t n = 50000;
  for (std::size_t i = 0; i < n; ++i) {
    for (double z : s.normals(i, 0, 0)) {
      m += z;
      v += z * z;
      k += z * z * z * z;
    }
  }
  const double N = 4.0 * n;
  CHECK(std::abs(m / N) < 5.0 / std::sqrt(N));
  CHECK(std::abs(v / N - 1.0) < 5.0 * std::sqrt(2.0 / N));
  CHECK(std::abs(k / N - 3.0) < 5.0 * std::sqrt(96.0 / N));
  CHECK(rng::to_unit(0) > 0.0);
  CHECK(rng::to_unit(0xffffffffu) < 1.0);
  CHECK(rng::derive_seed(1, 0) != rng::derive_seed(1, 1));
}

TEST_CASE("number formatting round trips") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 2000; ++i) {
    const double x = u(gen) * std::pow(10.0, static_cast<int>(gen() % 40) - 20);
    CHECK(io::parse_double(io::format_double(x)) == x);
  }
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::parse_double("-2.5e-3") == -2.5e-3);
  CHECK_THROWS_AS(io::parse_double("1.5x"), ConfigError);
  CHECK_THROWS_AS(io::parse_double(""), ConfigError);
  CHECK_THROWS_AS(io::parse_double("1,5"), ConfigError);
  CHECK_THROWS_AS(io::parse_double("1 2"), ConfigError);
}

TEST_CASE("csv dialect") {
  io::CsvWriter w({"a", "b"});
  const double row[] = {1.0, 0.25};
  w.add_row(row);
  w.add_row(std::vector<std::string>{"x", "y"});
  CHECK(w.str() == "a,b\n1,0.25\nx,y\n");
  CHECK(w.rows() == 2);
  const double bad[] = {1.0};
  CHECK_THROWS_AS(w.add_row(bad), std::invalid_argument);

  const auto dir = std::filesystem::temp_directory_path() / "bbm_infra_test";
  std::filesystem::create_directories(dir);
  io::write_file_atomic(dir / "t.csv", w.str());
  const auto t = io::read_csv(dir / "t.csv");
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  CHECK(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "0.25");
  io::write_file_atomic(dir / "r.csv", "a,b\n1\n");
  CHECK_THROWS_AS(io::read_csv(dir / "r.csv"), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("json dump is canonical") {
  nlohmann::json j = {{"b", 1.5}, {"a", {1, 2}}};
  const auto s = io::dump_json(j);
  CHECK(s.find("\"a\"") < s.find("\"b\""));
  CHECK(nlohmann::json::parse(s) == j);
  CHECK(io::dump_json(j) == io::dump_json(nlohmann::json::parse(s)));
}

TEST_CASE("sha256 test vectors") {
  CHECK(io::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("sturm bisection agrees with a dense eigensolver") {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(-1, 1);
  num::SymTridiagonal m;
  const std::size_t n = 40;
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    m.diag.push_back(3 * u(gen));
    dense(i, i) = m.diag.back();
    if (i + 1 < n) {
      m.off.push_back(u(gen));
      dense(i, i + 1) = dense(i + 1, i) = m.off.back();
    }
  }
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(dense).eigenvalues();
  const auto [lo, hi] = m.gershgorin();
  for (std::size_t k = 0; k < n; ++k) {
    const double l = m.eigenvalue(k, lo, hi, 1e-13);
    CHECK(l == doctest::Approx(ev(k)).epsilon(1e-10).scale(1.0));
    const auto v = m.eigenvector(l);
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(v.data(), n);
    CHECK((dense * x - l * x).norm() < 1e-8);
  }
  CHECK(m.count_below(hi + 1) == n);
  CHECK(m.count_below(lo - 1) == 0);
}

TEST_CASE("tridiagonal solvers") {
  const std::vector<double> sub{1, 1, 1}, diag{4, 4, 4, 4}, sup{1, 1, 1}, rhs{5, 6, 6, 5};
  const auto x = num::solve_tridiagonal_pivot(sub, diag, sup, rhs);
  for (double v : x) CHECK(v == doctest::Approx(1.0));
  std::vector<double> r = rhs, scratch;
  num::solve_tridiagonal(sub, diag, sup, r, scratch);
  for (double v : r) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("quadrature, interpolation and fits") {
  std::vector<double> f;
  const double h = 0.01;
  for (int i = 0; i <= 100; ++i) f.push_back(std::exp(i * h));
  CHECK(num::simpson(f, h) == doctest::Approx(std::exp(1.0) - 1).epsilon(1e-10));
  CHECK(num::interp_cubic(f, 0.0, h, 0.505) == doctest::Approx(std::exp(0.505)).epsilon(1e-8));
  const std::vector<double> xs{0, 1, 2, 3}, ys{1, 3, 5, 7};
  const auto fit = num::fit_line(xs, ys);
  CHECK(fit.slope == doctest::Approx(2.0));
  CHECK(fit.intercept == doctest::Approx(1.0));
  CHECK(fit.r_squared == doctest::Approx(1.0));
  CHECK(num::median({3, 1, 2}) == 2.0);
  CHECK(num::median({4, 1, 2, 3}) == 2.5);
}

TEST_CASE("parallel map is indexed and propagates errors") {
  const auto out = par::map_indexed<std::size_t>(1000, [](std::size_t i) { return i * i; }, 4);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == i * i);
  CHECK_THROWS_AS(par::map_indexed<int>(10, [](std::size_t i) -> int {
                    if (i == 7) throw DomainError("boom");
                    return 0;
                  }, 3),
                  DomainError);
}
