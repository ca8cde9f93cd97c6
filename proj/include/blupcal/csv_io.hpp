#pragma once

#include "blupcal/model_core.hpp"

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace blupcal {

/// Header plus rows of raw string fields. Empty lines are skipped.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;

  int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(std::istream& in, const std::string& source = "<stream>");

/// Long format `subject_id,replicate_index,value`. Replicate indices are
/// positive integers; the panel has max(index) columns and absent indices are
/// masked. An empty or NA value counts as absent.
ReplicatePanel read_replicates(std::istream& in, const std::string& source = "<stream>");
ReplicatePanel read_replicates_file(const std::string& path);

/// Observed cells only, 17 significant digits.
void write_replicates(const ReplicatePanel& panel, std::ostream& out);

/// Outcome file `subject_id,<outcome>,<covariates...>`. Empty or NA cells
/// become NaN and are dropped listwise by the estimator.
OutcomePanel read_outcomes(std::istream& in, const std::string& outcome,
                           const std::vector<std::string>& covariates,
                           const std::string& source = "<stream>");
OutcomePanel read_outcomes_file(const std::string& path, const std::string& outcome,
                                const std::vector<std::string>& covariates);

struct AlignedPanels {
  ReplicatePanel replicates;
  OutcomePanel outcomes;
  int dropped_replicate_only = 0;  // subjects with replicates but no outcome row
  int dropped_outcome_only = 0;    // subjects with an outcome row but no replicates
};

/// Restricts both panels to their common subjects, in replicate-file order.
AlignedPanels align_panels(const ReplicatePanel& replicates, const OutcomePanel& outcomes);

/// "%.17g"
std::string format_exact(double v);

}  // namespace blupcal
