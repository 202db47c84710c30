#include "contact_replay/rng.hpp"

#include <sstream>

#include "contact_replay/errors.hpp"

namespace contact_replay {

std::string rng_state(const Rng& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

void set_rng_state(Rng& rng, const std::string& state) {
  std::istringstream in(state);
  in >> rng;
  if (!in) throw IoError("malformed generator state");
}

}  // namespace contact_replay
