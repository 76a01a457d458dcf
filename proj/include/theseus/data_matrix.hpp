#ifndef THESEUS_DATA_MATRIX_HPP
#define THESEUS_DATA_MATRIX_HPP

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace theseus {

// Dense readings matrix: every participant has one value for every task.
// Worker and task order is the order of first appearance.
class DataMatrix {
 public:
  DataMatrix() = default;
  DataMatrix(std::vector<std::string> workers, std::vector<std::string> tasks,
             std::vector<double> values);

  std::size_t worker_count() const { return workers_.size(); }
  std::size_t task_count() const { return tasks_.size(); }
  const std::vector<std::string>& workers() const { return workers_; }
  const std::vector<std::string>& tasks() const { return tasks_; }
  const std::vector<double>& values() const { return values_; }

  double at(std::size_t worker, std::size_t task) const {
    return values_[worker * tasks_.size() + task];
  }

  // Expects a header line `worker_id,task_id,value`, one reading per line.
  // Throws std::runtime_error on duplicates, ragged coverage, or bad fields.
  static DataMatrix from_csv(std::istream& in);
  static DataMatrix from_csv_file(const std::string& path);
  void to_csv(std::ostream& out) const;

 private:
  std::vector<std::string> workers_;
  std::vector<std::string> tasks_;
  std::vector<double> values_;  // row-major, worker * task_count + task
};

}  // namespace theseus

#endif  // THESEUS_DATA_MATRIX_HPP
