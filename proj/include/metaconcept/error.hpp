// Copyright (c) 2026, MetaConcept contributors
// SPDX-License-Identifier: Apache-2.0
//
// Exception hierarchy shared by every module. The CLI maps each family to a
// distinct process exit code (see cli.hpp).

#pragma once

#include <stdexcept>
#include <string>

namespace metaconcept {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration value or inconsistent parameter shapes in a config.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Tensor shapes that do not fit an operation.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Integer label or index outside its valid range.
class IndexError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent input data (graph file, dataset file, splits).
class DataError : public Error {
public:
    using Error::Error;
};

/// Graph file failed to parse or violates a hierarchy invariant.
class LoadError : public DataError {
public:
    using DataError::DataError;
};

/// Row selection with duplicate or out-of-range node ids.
class SelectionError : public DataError {
public:
    using DataError::DataError;
};

/// Not enough classes or samples to build a requested episode.
class SamplingError : public DataError {
public:
    using DataError::DataError;
};

/// NaN or Inf produced anywhere in a computation.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace metaconcept
