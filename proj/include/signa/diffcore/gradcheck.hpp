#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "signa/diffcore/tape.hpp"

namespace signa {

struct GradcheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  double tolerance = 0.0;

  double max_rel_error() const {
    double m = 0.0;
    for (const auto& e : entries) m = std::max(m, e.max_rel_error);
    return m;
  }
  bool passed() const { return max_rel_error() < tolerance; }
};

/// Compares backward() against central differences for every entry of every
/// parameter. `loss` must rebuild the computation from scratch on the given
/// tape (including re-seeding any RNG it consumes).
///
/// Relative error per entry is |analytic - numeric| / max(|analytic|, |numeric|, floor);
/// the floor keeps entries whose true gradient is ~0 from dividing by noise.
inline GradcheckReport gradcheck(const std::function<Var<double>(Tape<double>&)>& loss,
                                 const std::vector<Parameter*>& params, double h = 1e-6, double tol = 1e-5,
                                 double floor = 1e-3) {
  for (auto* p : params) p->zero_grad();
  {
    Tape<double> tape;
    tape.backward(loss(tape));
  }
  GradcheckReport report;
  report.tolerance = tol;
  for (auto* p : params) {
    GradcheckEntry entry{p->name, 0.0, 0.0};
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      auto eval = [&](double v) {
        p->value[i] = v;
        Tape<double> tape;
        const double out = loss(tape).value().item();
        tape.reset();
        return out;
      };
      const double plus = eval(saved + h);
      const double minus = eval(saved - h);
      p->value[i] = saved;
      const double numeric = (plus - minus) / (2.0 * h);
      const double analytic = p->grad[i];
      const double abs_err = std::abs(analytic - numeric);
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      entry.max_abs_error = std::max(entry.max_abs_error, abs_err);
      entry.max_rel_error = std::max(entry.max_rel_error, abs_err / denom);
    }
    report.entries.push_back(entry);
  }
  for (auto* p : params) p->zero_grad();
  return report;
}

}  // namespace signa
