// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace msnf {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or layer shapes disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A sequence op received an empty sequence.
class SequenceLengthError : public Error {
 public:
  using Error::Error;
};

/// A hyper-parameter or argument is out of its valid range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an API precondition (non-scalar loss, missing grads, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Batch norm in train mode over zero rows.
class EmptyBatchError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Values that parse but violate the record schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace msnf
