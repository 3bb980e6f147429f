// Writes parity-check matrices in alist format for a requested (rate, n)
// grid: quasi-cyclic near-regular codes, or (3,6)-regular PEG codes.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "mulink/coding.hpp"

int main(int argc, char** argv) {
  CLI::App app{"alist generator for the LDPC code family"};
  std::vector<double> rates{0.5};
  std::vector<int> lengths{648};
  std::string kind = "peg";
  std::string out = ".";
  std::uint64_t seed = 0x5EEDC0DEULL;
  app.add_option("--rate", rates, "code rates (qc kind; peg is fixed at 1/2)");
  app.add_option("--n", lengths, "codeword lengths");
  app.add_option("--kind", kind, "qc | peg")->check(CLI::IsMember({"qc", "peg"}));
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", seed, "construction seed");
  CLI11_PARSE(app, argc, argv);

  std::filesystem::create_directories(out);
  try {
    for (int n : lengths) {
      if (kind == "peg") {
        const mulink::CodeSpec code = mulink::CodeSpec::make_peg(n, 3, 6, seed);
        char path[256];
        std::snprintf(path, sizeof path, "%s/peg_3_6_n%d.alist", out.c_str(), n);
        code.save_alist(path);
        std::printf("%s (k=%d)\n", path, code.k());
      } else {
        for (double r : rates) {
          const mulink::CodeSpec code = mulink::CodeSpec::make_qc(r, n, seed);
          char path[256];
          std::snprintf(path, sizeof path, "%s/qc_r%.4f_n%d.alist", out.c_str(), code.rate(), n);
          code.save_alist(path);
          std::printf("%s (k=%d)\n", path, code.k());
        }
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
