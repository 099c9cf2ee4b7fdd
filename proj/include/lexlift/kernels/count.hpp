#pragma once

#include <string>
#include <vector>

#include "lexlift/vocab.hpp"

// Token frequency counting over whitespace-separated lines.
namespace lexlift::kernels {

namespace serial {
TokenCounts count_tokens(const std::vector<std::string>& lines);
}

namespace omp {
// Thread-local maps merged at the end; result identical to the serial kernel.
TokenCounts count_tokens(const std::vector<std::string>& lines, int workers);
}

}  // namespace lexlift::kernels
