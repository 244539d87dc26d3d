#include "iloco/errors.hpp"

#include <sstream>

namespace iloco {

std::string InsufficientCoverageError::format(std::size_t row,
                                              const std::vector<int>& excluded,
                                              std::size_t qualifying,
                                              double expected) {
    std::ostringstream os;
    os << "no qualifying minipatch for row " << row;
    if (!excluded.empty()) {
        os << " excluding features {";
        for (std::size_t i = 0; i < excluded.size(); ++i) {
            if (i) os << ",";
            os << excluded[i];
        }
        os << "}";
    }
    os << ": " << qualifying << " patches qualify, expected about " << expected
       << "; increase the number of minipatches B";
    return os.str();
}

InsufficientCoverageError::InsufficientCoverageError(std::size_t row,
                                                     std::vector<int> excluded,
                                                     std::size_t qualifying,
                                                     double expected)
    : EstimatorError(format(row, excluded, qualifying, expected)),
      row_(row),
      excluded_(std::move(excluded)),
      qualifying_(qualifying),
      expected_(expected) {}

}  // namespace iloco
