#pragma once

// JSON checkpoints: model kind, model configuration, vocabularies and every
// named tensor with its shape and trainable flag.

#include <memory>
#include <string>

#include "models.hpp"

namespace negscope {

template <typename Real>
std::string checkpoint_json(const ScopeModel<Real>& model);
template <typename Real>
void save_checkpoint(const ScopeModel<Real>& model, const std::string& path);

// Throws ParseError-derived errors for malformed files and Error(kShape)
// when a stored tensor does not fit the rebuilt model.
template <typename Real>
std::unique_ptr<ScopeModel<Real>> checkpoint_from_json(const std::string& text,
                                                       const std::string& name = "<checkpoint>");
template <typename Real>
std::unique_ptr<ScopeModel<Real>> load_checkpoint(const std::string& path);

}  // namespace negscope
