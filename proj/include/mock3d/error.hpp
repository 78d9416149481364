#pragma once

#include <stdexcept>
#include <string>

namespace mock3d {

/// Bad user input: unreadable files, invalid scenes or meshes, rejected
/// parameters. The CLI maps these to exit status 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DecodeError : public InputError {
public:
    using InputError::InputError;
};

class SceneError : public InputError {
public:
    using InputError::InputError;
};

class MeshError : public InputError {
public:
    using InputError::InputError;
};

} // namespace mock3d
