#pragma once

#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace qc {

// Error taxonomy. Everything user-facing derives from Error so the CLI can map
// failures to exit codes in one place.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error("config error: " + msg) {}
};

class FormatError : public Error {
public:
    explicit FormatError(const std::string& msg) : Error("format error: " + msg) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error("io error: " + msg) {}
};

class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error("shape error: " + msg) {}
};

class ContractError : public Error {
public:
    explicit ContractError(const std::string& msg) : Error("contract error: " + msg) {}
};

class TrainError : public Error {
public:
    explicit TrainError(const std::string& msg) : Error("training error: " + msg) {}
};

class GenerationError : public Error {
public:
    explicit GenerationError(const std::string& msg) : Error("generation error: " + msg) {}
};

class InterpolationError : public Error {
public:
    explicit InterpolationError(const std::string& msg) : Error("interpolation error: " + msg) {}
};

class MetricError : public Error {
public:
    explicit MetricError(const std::string& msg) : Error("metric error: " + msg) {}
};

class UnsupportedMeshError : public Error {
public:
    explicit UnsupportedMeshError(const std::string& msg) : Error("unsupported mesh: " + msg) {}
};

// Operation counters for complexity instrumentation. Shared across threads,
// hence atomics; everything else in the library is immutable after
// construction.
struct OpCounter {
    std::atomic<std::uint64_t> distance_evals{0};
    std::atomic<std::uint64_t> kernel_evals{0};
    std::atomic<std::uint64_t> macs{0};

    void reset() {
        distance_evals.store(0);
        kernel_evals.store(0);
        macs.store(0);
    }
};

int max_threads();
void set_max_threads(int n);

}  // namespace qc
