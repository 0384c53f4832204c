#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <mmcoal/mmcoal.hpp>

namespace testing_support {

/// Independent quadrature of lambda_{b,k} = int x^{k-2} (1-x)^{b-k} Lambda(dx)
/// for a single Beta(a, b) component of unit mass.
inline double beta_rate_by_quadrature(double a, double beta, std::int64_t b, std::int64_t k) {
  boost::math::quadrature::tanh_sinh<double> integrator;
  const double log_norm = std::lgamma(a) + std::lgamma(beta) - std::lgamma(a + beta);
  auto f = [&](double x, double xc) {
    // xc = 1 - x computed accurately near the endpoints.
    const double one_minus = (x > 0.5) ? xc : 1.0 - x;
    const double lx = std::log(x);
    const double l1 = std::log(one_minus);
    return std::exp((static_cast<double>(k - 2) + a - 1.0) * lx + (static_cast<double>(b - k) + beta - 1.0) * l1 -
                    log_norm);
  };
  return integrator.integrate(f, 0.0, 1.0);
}

/// Canonical scenario text built from random epochs; numbers already carry at
/// most 12 significant digits.
inline std::string random_canonical_scenario(mmcoal::Rng& rng) {
  using mmcoal::format_g12;
  const int epochs = 1 + static_cast<int>(mmcoal::uniform_index(rng, 5));
  std::string out;
  if (mmcoal::uniform01(rng) < 0.3) out += "label run" + std::to_string(mmcoal::uniform_index(rng, 1000)) + "\n";
  if (mmcoal::uniform01(rng) < 0.3) out += "gamma " + format_g12(1.0 + mmcoal::uniform01(rng)) + "\n";
  if (mmcoal::uniform01(rng) < 0.3) out += "horizon " + format_g12(0.5 + 10.0 * mmcoal::uniform01(rng)) + "\n";
  double start = 0.0;
  for (int i = 0; i < epochs; ++i) {
    std::string end = "inf";
    double end_value = 0.0;
    if (i + 1 < epochs) {
      end_value = std::stod(format_g12(start + 0.01 + 2.0 * mmcoal::uniform01(rng)));
      end = format_g12(end_value);
    }
    out += "epoch " + format_g12(start) + " " + end;
    if (mmcoal::uniform01(rng) < 0.5) {
      out += " constant size=" + format_g12(0.05 + 3.0 * mmcoal::uniform01(rng));
    } else {
      out += " exp rate=" + format_g12(-1.0 + 3.0 * mmcoal::uniform01(rng));
      if (mmcoal::uniform01(rng) < 0.5) out += " size=" + format_g12(0.05 + 3.0 * mmcoal::uniform01(rng));
    }
    out += "\n";
    start = end_value;
  }
  return out;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Runs the command-line tool with the given arguments; returns its exit status.
inline int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "\"" MMCOAL_CLI "\" " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace testing_support
