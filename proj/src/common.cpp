#include "qckit/common.hpp"

#include <algorithm>
#include <thread>

namespace qc {

namespace {
int g_max_threads = 1;
}

int max_threads() { return g_max_threads; }

void set_max_threads(int n) {
    const int hw = static_cast<int>(std::thread::hardware_concurrency());
    g_max_threads = std::clamp(n, 1, hw > 0 ? hw : 1);
}

}  // namespace qc
