#pragma once

#include "junglekit/core/embedding.hpp"
#include "junglekit/core/errors.hpp"
#include "junglekit/core/fnv.hpp"
#include "junglekit/core/language.hpp"
#include "junglekit/core/pii.hpp"
#include "junglekit/core/query_key.hpp"
#include "junglekit/core/text.hpp"
#include "junglekit/core/unicode.hpp"
