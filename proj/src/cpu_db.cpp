// Copyright 2026 The co2track Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "co2track/cpu_db.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <regex>
#include <sstream>

#include "co2track/csv.hpp"
#include "co2track/errors.hpp"
#include "co2track/numeric.hpp"
#include "embedded_data.hpp"

namespace co2track {

namespace {

void erase_all(std::string& text, std::string_view needle) {
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos)) {
    text.erase(pos, needle.size());
  }
}

std::string normalize_once(std::string text) {
  for (char& c : text) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  for (std::string_view mark : {"(r)", "(tm)", "(c)", "\xC2\xAE", "\xE2\x84\xA2", "\xC2\xA9"}) {
    erase_all(text, mark);
  }
  static const std::regex clock_suffix(R"(@ *[0-9]+(\.[0-9]*)? *[gm]hz)");
  text = std::regex_replace(text, clock_suffix, " ");

  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (c == ' ' && (out.empty() || out.back() == ' ')) continue;
    out.push_back(c);
  }
  if (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

std::vector<std::string> tokenize(std::string_view normalized) {
  std::vector<std::string> tokens;
  std::istringstream in{std::string(normalized)};
  std::string token;
  while (in >> token) tokens.push_back(token);
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  return tokens;
}

bool has_digit(const std::string& token) {
  return std::any_of(token.begin(), token.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::vector<std::string> digit_tokens(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  std::copy_if(tokens.begin(), tokens.end(), std::back_inserter(out), has_digit);
  return out;
}

std::size_t common_count(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::string> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
  return both.size();
}

}  // namespace

std::string normalize_model(std::string_view raw_name) {
  std::string current(raw_name);
  while (true) {
    std::string next = normalize_once(current);
    if (next == current) return next;
    current = std::move(next);
  }
}

CpuDatabase CpuDatabase::from_csv(std::istream& in) {
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto rows = csv::parse(text);
  if (rows.empty() || csv::format_row(rows.front().fields) != "model,tdp_watts") {
    throw ParseError("CPU database header must be 'model,tdp_watts'", rows.empty() ? 0 : 1);
  }

  CpuDatabase db;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& fields = rows[i].fields;
    const std::size_t at = rows[i].line;
    if (fields.size() != 2) throw ParseError("expected 2 fields", at);
    std::string model = normalize_model(fields[0]);
    if (model.empty()) throw ParseError("empty model name", at);
    const auto tdp = parse_double(fields[1]);
    if (!tdp || !(*tdp > 0.0)) throw ParseError("TDP must be a positive number", at);
    db.entries_.push_back(CpuSpec{std::move(model), *tdp});
  }
  std::sort(db.entries_.begin(), db.entries_.end(),
            [](const CpuSpec& a, const CpuSpec& b) { return a.model_name < b.model_name; });
  auto dup = std::adjacent_find(
      db.entries_.begin(), db.entries_.end(),
      [](const CpuSpec& a, const CpuSpec& b) { return a.model_name == b.model_name; });
  if (dup != db.entries_.end()) {
    throw ParseError("duplicate CPU model '" + dup->model_name + "'", 0);
  }
  db.index_.reserve(db.entries_.size());
  for (const auto& entry : db.entries_) db.index_.push_back(Indexed{tokenize(entry.model_name)});
  return db;
}

CpuDatabase CpuDatabase::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open CPU database " + path.string());
  return from_csv(in);
}

std::shared_ptr<const CpuDatabase> CpuDatabase::builtin() {
  static const auto db = [] {
    std::istringstream in{std::string(detail::kBuiltinCpuTdpCsv)};
    return std::make_shared<const CpuDatabase>(from_csv(in));
  }();
  return db;
}

TdpLookup CpuDatabase::lookup_tdp(std::string_view raw_name) const {
  const std::string query = normalize_model(raw_name);
  if (query.empty()) return {};

  auto exact = std::lower_bound(
      entries_.begin(), entries_.end(), query,
      [](const CpuSpec& e, const std::string& key) { return e.model_name < key; });
  if (exact != entries_.end() && exact->model_name == query) {
    return TdpLookup{exact->tdp_watts, true, exact->model_name};
  }

  const auto query_tokens = tokenize(query);
  const auto query_digits = digit_tokens(query_tokens);
  double best_score = 0.0;
  const CpuSpec* best = nullptr;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& tokens = index_[i].tokens;
    // Model numbers must agree exactly; word overlap alone would happily
    // match "gold 6230" to "gold 6248".
    if (digit_tokens(tokens) != query_digits) continue;
    const double score = static_cast<double>(common_count(tokens, query_tokens)) /
                         static_cast<double>(std::max(tokens.size(), query_tokens.size()));
    if (score > best_score) {
      best_score = score;
      best = &entries_[i];
    }
  }
  if (best && best_score >= kTdpMatchThreshold) {
    return TdpLookup{best->tdp_watts, true, best->model_name};
  }
  return {};
}

}  // namespace co2track
