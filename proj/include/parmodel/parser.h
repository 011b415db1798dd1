// Copyright 2026 The parmodel Authors.
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

// Reader and canonical printer for the `.pmod` model language.
//
// A document is line oriented: an optional `model "name"` header, one
// `topology` declaration, optional `costs { ... }` and `params { ... }`
// blocks, then one or more `role NAME on rank(s) ... { ... }` blocks holding
// the role's activity flow. `#` starts a comment; a comment trailing a node
// on the same line is kept as that node's note. print_model emits the
// canonical form, which parse_model reads back to an equal Model.

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "parmodel/diagnostic.h"
#include "parmodel/model.h"

namespace parmodel {

struct ParseResult {
  std::optional<Model> model;  // empty when any error was reported
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return model.has_value(); }
};

ParseResult parse_model(std::string_view source);

std::string print_model(const Model& m);

/// Parses a standalone expression; diagnostics are appended on failure.
std::optional<Expr> parse_expression(std::string_view source, std::vector<Diagnostic>& diagnostics);

}  // namespace parmodel
