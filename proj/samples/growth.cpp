// Mean pair coalescence time under exponential growth, limit process versus a
// modified Moran model.

#include <cstdio>

#include <mmcoal/mmcoal.hpp>

int main() {
  using namespace mmcoal;
  const auto profile = SizeProfile::exponential(0.5, 1.0);
  const auto model = CanningsModel::moran_thinned(LambdaMeasure::dirac(0.3), 1.5);
  const auto spec = make_spec(model, 2, 2000, profile, 2000, 7, 1);
  const auto rep = pair_time_experiment(spec, 0.03);
  std::printf("KS distance %.4f (tolerance %.2f) -> %s\n", rep.distance, rep.tolerance, rep.pass ? "pass" : "fail");
}
