#pragma once

#include <string>
#include <vector>

namespace mdh::bundled {

// One embedded data file; name is the file stem, content the raw JSON.
struct Entry {
  std::string name;
  std::string content;
};

const std::vector<Entry>& computations();
const std::vector<Entry>& fixtures();

} // namespace mdh::bundled
