#include "entbridge/acceptance.hpp"
#include "entbridge/scenario.hpp"

#include <iostream>

int main() {
  try {
    return entbridge::verify_all({}, std::cout);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
}
