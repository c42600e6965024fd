#pragma once

#include <stdexcept>
#include <string>

namespace dagdec {

// All library errors derive from Error so callers can catch one base type.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A probability row does not sum to one (message names the 1-based row).
class NormalizationError : public Error {
 public:
  using Error::Error;
};

// Transition mass placed on a forbidden (non strictly upper-triangular) entry.
class StructureError : public Error {
 public:
  using Error::Error;
};

// Target longer than the graph, or otherwise impossible length.
class LengthError : public Error {
 public:
  using Error::Error;
};

// Token index outside the vocabulary.
class VocabError : public Error {
 public:
  using Error::Error;
};

// Target has zero likelihood under the DAG (only possible for hand-built graphs).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class UnknownTokenError : public Error {
 public:
  using Error::Error;
};

class EmptyCorpusError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace dagdec
