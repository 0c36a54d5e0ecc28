#include "synthetic.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char **argv) {
  CLI::App app{"Write Breiman's twonorm or ringnorm data as a libsvm file"};
  std::string kind;
  std::string out;
  std::uint64_t seed = 1;
  app.add_option("kind", kind, "twonorm or ringnorm")->required()->check(CLI::IsMember({"twonorm", "ringnorm"}));
  app.add_option("out", out, "Output path")->required();
  app.add_option("--seed", seed, "Generator seed");
  CLI11_PARSE(app, argc, argv);

  const auto table = kind == "twonorm" ? amlsvm::synthetic::twonorm(seed) : amlsvm::synthetic::ringnorm(seed);
  amlsvm::synthetic::write_libsvm(table, out);
  std::cout << "wrote " << table.points.rows() << " points to " << out << '\n';
  return 0;
}
