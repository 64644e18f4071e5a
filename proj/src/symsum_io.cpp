#include "agm/symsum_io.hpp"

namespace agm::symsum {

nlohmann::json family_to_json(const OperatorFamily& fam) {
  nlohmann::json ops = nlohmann::json::array();
  for (const auto& a : fam.ops()) {
    nlohmann::json entries = nlohmann::json::array();
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) entries.push_back({a(i, j).real(), a(i, j).imag()});
    ops.push_back(std::move(entries));
  }
  return {{"n", fam.n()}, {"m", fam.m()}, {"ops", std::move(ops)}};
}

OperatorFamily family_from_json(const nlohmann::json& doc) {
  try {
    const int n = doc.at("n").get<int>();
    const int m = doc.at("m").get<int>();
    const auto& ops = doc.at("ops");
    if (n < 1 || m < 1) throw DomainError("family json: n and m must be >= 1");
    if (!ops.is_array() || static_cast<int>(ops.size()) != n)
      throw DomainError("family json: \"ops\" must hold exactly n matrices");
    std::vector<Matrix> mats;
    mats.reserve(static_cast<std::size_t>(n));
    for (const auto& entries : ops) {
      if (!entries.is_array() || static_cast<int>(entries.size()) != m * m)
        throw DomainError("family json: each matrix needs m*m [re, im] entries");
      Matrix a(m, m);
      for (int idx = 0; idx < m * m; ++idx) {
        const auto& z = entries[static_cast<std::size_t>(idx)];
        if (!z.is_array() || z.size() != 2) throw DomainError("family json: entries are [re, im] pairs");
        a(idx / m, idx % m) = Complex(z[0].get<double>(), z[1].get<double>());
      }
      mats.push_back(std::move(a));
    }
    return OperatorFamily(std::move(mats));
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("family json: ") + e.what());
  }
}

}  // namespace agm::symsum
