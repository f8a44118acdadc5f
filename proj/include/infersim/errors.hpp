#pragma once

#include <stdexcept>
#include <string>

namespace infersim {

struct DecodeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FetchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnsupportedFormat : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptySequence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ContextOverflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct QueueFull : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShuttingDown : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TargetUnreachable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ScenarioFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace infersim
