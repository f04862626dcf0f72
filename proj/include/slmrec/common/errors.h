// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace slmrec {

// Base class for every error raised by the library. The CLI maps the
// category to a process exit code.
class Error : public std::runtime_error {
 public:
  enum class Category { kUsage, kData, kTraining };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const { return category_; }

 private:
  Category category_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what)
      : Error(Category::kTraining, "dimension error: " + what) {}
};

class IndexError : public Error {
 public:
  explicit IndexError(const std::string& what)
      : Error(Category::kTraining, "index error: " + what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(Category::kTraining, "numeric error: " + what) {}
};

class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& what)
      : Error(Category::kTraining, "training error: " + what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(Category::kUsage, "config error: " + what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what)
      : Error(Category::kData, "I/O error: " + what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what)
      : Error(Category::kData, "format error: " + what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what)
      : Error(Category::kData, "data error: " + what) {}
};

class SamplingError : public Error {
 public:
  explicit SamplingError(const std::string& what)
      : Error(Category::kData, "sampling error: " + what) {}
};

class EvaluationError : public Error {
 public:
  explicit EvaluationError(const std::string& what)
      : Error(Category::kTraining, "evaluation error: " + what) {}
};

}  // namespace slmrec
