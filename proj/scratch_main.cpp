#include <iostream>
#include "trop/tropical.hpp"

using namespace trop;

int main(int argc, char** argv) {
  setvbuf(stdout, nullptr, _IONBF, 0);
  std::cout.setf(std::ios::unitbuf);
  std::vector<std::string> names = {"pendulum", "p2", "chekanov", "quadric_triangle",
                                    "tsing(2,1,1)", "bl1", "bl4", "bl5", "bl6"};
  if (argc > 1) { names.clear(); for (int i = 1; i < argc; ++i) names.push_back(argv[i]); }
  for (const auto& nm : names) {
    BaseDiagram d = catalog_entry(nm);
    try {
      auto trees = enumerate_index_two_trees(d);
      std::cout << nm << ": W = " << to_string(assemble_potential(trees))
                << "   trees=" << trees.size()
                << " configs=" << configuration_total(d, trees) << "\n";
      for (const auto& t : trees)
        std::cout << "   " << t.key << "  mult=" << rat_str(t.multiplicity) << "\n";
    } catch (const std::exception& e) {
      std::cout << nm << ": ERROR " << e.what() << "\n";
    }
  }
  return 0;
}
