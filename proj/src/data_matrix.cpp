#include "theseus/data_matrix.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace theseus {

namespace {

void check_unique(const std::vector<std::string>& ids, const char* what) {
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) {
      throw std::runtime_error(std::string("duplicate ") + what + " id: " + id);
    }
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

DataMatrix::DataMatrix(std::vector<std::string> workers,
                       std::vector<std::string> tasks,
                       std::vector<double> values)
    : workers_(std::move(workers)),
      tasks_(std::move(tasks)),
      values_(std::move(values)) {
  check_unique(workers_, "worker");
  check_unique(tasks_, "task");
  if (values_.size() != workers_.size() * tasks_.size()) {
    throw std::runtime_error("data matrix is not dense");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw std::runtime_error("non-finite reading");
  }
}

DataMatrix DataMatrix::from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "worker_id,task_id,value") {
    throw std::runtime_error("expected header `worker_id,task_id,value`, got: " +
                             line);
  }

  std::vector<std::string> workers;
  std::vector<std::string> tasks;
  std::unordered_map<std::string, std::size_t> worker_index;
  std::unordered_map<std::string, std::size_t> task_index;
  // (worker, task) -> value, filled in first-appearance order.
  std::vector<std::unordered_map<std::size_t, double>> rows;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": expected 3 fields");
    }
    auto [wit, winserted] =
        worker_index.try_emplace(fields[0], workers.size());
    if (winserted) {
      workers.push_back(fields[0]);
      rows.emplace_back();
    }
    auto [tit, tinserted] = task_index.try_emplace(fields[1], tasks.size());
    if (tinserted) tasks.push_back(fields[1]);

    double value;
    try {
      std::size_t pos = 0;
      value = std::stod(fields[2], &pos);
      if (pos != fields[2].size()) throw std::invalid_argument(fields[2]);
    } catch (const std::exception&) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": bad value `" + fields[2] + "`");
    }
    if (!rows[wit->second].emplace(tit->second, value).second) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": duplicate reading for (" + fields[0] + ", " +
                               fields[1] + ")");
    }
  }
  if (workers.empty()) throw std::runtime_error("CSV has no readings");

  std::vector<double> values(workers.size() * tasks.size());
  for (std::size_t w = 0; w < workers.size(); ++w) {
    if (rows[w].size() != tasks.size()) {
      throw std::runtime_error("worker " + workers[w] +
                               " does not cover every task");
    }
    for (const auto& [t, v] : rows[w]) values[w * tasks.size() + t] = v;
  }
  return DataMatrix(std::move(workers), std::move(tasks), std::move(values));
}

DataMatrix DataMatrix::from_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return from_csv(in);
}

void DataMatrix::to_csv(std::ostream& out) const {
  out << "worker_id,task_id,value\n";
  char buf[32];
  for (std::size_t w = 0; w < workers_.size(); ++w) {
    for (std::size_t t = 0; t < tasks_.size(); ++t) {
      std::snprintf(buf, sizeof(buf), "%.17g", at(w, t));
      out << workers_[w] << ',' << tasks_[t] << ',' << buf << '\n';
    }
  }
}

}  // namespace theseus
