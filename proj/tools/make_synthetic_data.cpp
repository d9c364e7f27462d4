// Writes a synthetic adsorption-energy export for demos and smoke tests.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic adsorption-energy CSV"};
  adsorbrl::fixtures::SyntheticSpec spec;
  std::string out = "synthetic.csv";
  app.add_option("--out", out, "Output CSV path");
  app.add_option("--seed", spec.seed, "Random seed");
  app.add_option("--vocabulary", spec.vocabulary_size, "Number of elements (max 55)");
  app.add_option("--binaries", spec.binaries, "Binary compositions to sample");
  app.add_option("--ternaries", spec.ternaries, "Ternary compositions to sample");
  app.add_option("--p-known", spec.p_known, "Probability an adsorbate energy is known");
  CLI11_PARSE(app, argc, argv);

  std::ofstream f(out, std::ios::binary);
  if (!f) {
    std::cerr << "cannot write " << out << '\n';
    return 2;
  }
  f << adsorbrl::fixtures::synthetic_export(spec);
  return 0;
}
