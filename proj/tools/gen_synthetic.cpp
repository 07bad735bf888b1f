// Writes one of the built-in synthetic datasets in the dataset directory
// format, e.g. `hgb-gen-synthetic link data/toy-link --seed 3`.

#include <iostream>

#include "CLI11.hpp"
#include "hgb/errors.hpp"
#include "hgb/graph_io.hpp"
#include "hgb/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write a synthetic heterogeneous dataset"};
  std::string kind, out;
  std::uint64_t seed = 1;
  app.add_option("kind", kind, "node, dblp, link, link-homophilous or rec")->required();
  app.add_option("out", out, "output directory")->required();
  app.add_option("--seed", seed, "generator seed");
  CLI11_PARSE(app, argc, argv);
  try {
    const auto g = hgb::synthetic_graph(kind, seed);
    hgb::save_graph(g, out);
    std::cout << g.name << ": " << g.node_count() << " nodes, " << g.edges.size() << " edges -> " << out << '\n';
  } catch (const hgb::ContractError& e) {
    std::cerr << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
  return 0;
}
