#include "ciolab/state.hpp"

namespace ciolab {

const std::vector<double>& ActionSpace::levels() {
  static const std::vector<double> kLevels = {-6.0, -4.0, -2.0, 0.0, 2.0, 4.0, 6.0};
  return kLevels;
}

double ActionSpace::level(int index) {
  if (index < 0 || index >= size()) throw std::out_of_range("ActionSpace::level: bad index");
  return levels()[index];
}

int ActionSpace::neutral_index() { return 3; }

}  // namespace ciolab
