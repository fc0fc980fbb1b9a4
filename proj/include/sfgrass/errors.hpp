#pragma once

#include <stdexcept>
#include <string>

namespace sfgrass {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Input validation failures: bad node ids, bad weights, bad parameters.
class InvalidInput : public Error {
public:
    using Error::Error;
};

class NegativeWeight : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

class NodeIdOutOfRange : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

class DimensionMismatch : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

/// Matrix Market / edge-list parsing failures.
class MalformedHeader : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

class UnsupportedField : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

class EntryCountMismatch : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

class IndexOutOfBounds : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

class NonSquareMatrix : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

class ParseError : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// A random column vanished after deflation and retries were exhausted.
class DegenerateColumn : public Error {
public:
    using Error::Error;
};

class IsolatedNode : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

class EmbeddingMismatch : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

/// Coarse sparsifier references a coarse edge with no crossing fine edge.
class InconsistentMap : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

class TooLargeForDense : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

class NotSpanning : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

class DifferentComponents : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

class IndexOutOfRange : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

/// Numerical failure that indicates corrupted input (e.g. nonpositive pivot).
class NumericalBreakdown : public Error {
public:
    using Error::Error;
};

} // namespace sfgrass
