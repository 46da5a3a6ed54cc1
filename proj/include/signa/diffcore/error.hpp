#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace signa {

/// Root of every error thrown by the toolkit. The category decides the CLI
/// exit code (see `exit_code_for`).
class Error : public std::runtime_error {
 public:
  enum class Category { usage, data, numeric };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& what) : Error(Category::numeric, "dimension error: " + what) {}
};

struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& what) : Error(Category::usage, "invalid argument: " + what) {}
};

struct DomainError : Error {
  explicit DomainError(const std::string& what) : Error(Category::numeric, "domain error: " + what) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& what) : Error(Category::numeric, "numeric error: " + what) {}
};

struct DegenerateEmbedding : Error {
  DegenerateEmbedding(std::size_t row, const std::string& what)
      : Error(Category::numeric, "degenerate embedding at row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

struct ContractError : Error {
  explicit ContractError(const std::string& what) : Error(Category::usage, "contract error: " + what) {}
};

struct OptimizationError : Error {
  explicit OptimizationError(const std::string& what) : Error(Category::numeric, "optimization error: " + what) {}
};

/// Configuration problems are reported all at once; `issues()` lists every
/// offending key.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : ConfigError(std::vector<std::string>{what}) {}
  explicit ConfigError(std::vector<std::string> issues)
      : Error(Category::usage, join(issues)), issues_(std::move(issues)) {}

  const std::vector<std::string>& issues() const noexcept { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string out = "configuration error";
    for (const auto& issue : issues) out += "\n  - " + issue;
    return out;
  }
  std::vector<std::string> issues_;
};

struct IngestionError : Error {
  IngestionError(const std::string& file, std::size_t line, const std::string& what)
      : Error(Category::data, file + ":" + std::to_string(line) + ": " + what) {}
  explicit IngestionError(const std::string& what) : Error(Category::data, what) {}
};

struct AnalysisError : Error {
  explicit AnalysisError(const std::string& what) : Error(Category::data, "analysis error: " + what) {}
};

struct DegenerateGraph : Error {
  explicit DegenerateGraph(const std::string& what) : Error(Category::data, "degenerate graph: " + what) {}
};

struct CheckpointError : Error {
  explicit CheckpointError(const std::string& what) : Error(Category::data, "checkpoint error: " + what) {}
};

/// 1 usage/config, 2 data, 3 numeric failure.
inline int exit_code_for(const Error& e) noexcept {
  switch (e.category()) {
    case Error::Category::usage: return 1;
    case Error::Category::data: return 2;
    case Error::Category::numeric: return 3;
  }
  return 1;
}

}  // namespace signa
