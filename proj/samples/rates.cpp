// Prints merger rates and first-jump laws for a few measures.

#include <cstdio>

#include <mmcoal/measures.hpp>

int main() {
  for (const char* literal : {"kingman", "dirac:0.5", "beta:1,1", "mix:(kingman*0.5;dirac:1*0.5)"}) {
    const auto m = mmcoal::parse_measure(literal);
    const mmcoal::RateTable t(m, 5);
    std::printf("%s\n", literal);
    for (std::int64_t b = 2; b <= 5; ++b) {
      std::printf("  b=%lld  total=%.6f  jumps:", static_cast<long long>(b), t.total(b));
      for (double p : t.first_jump(b)) std::printf(" %.4f", p);
      std::printf("\n");
    }
  }
}
