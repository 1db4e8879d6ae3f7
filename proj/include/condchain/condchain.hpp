#pragma once

// Umbrella header for the condchain library: a verifiable predicate language
// with a sandboxed interpreter, an agentic chain-construction engine with
// two-stage verification, a paired-path benchmark composer, and a
// deterministic evaluation harness.

#include "adapters.hpp"
#include "analyze.hpp"
#include "backend.hpp"
#include "backend_procedural.hpp"
#include "backend_scripted.hpp"
#include "chain.hpp"
#include "composer.hpp"
#include "domain.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "eval.hpp"
#include "lexer.hpp"
#include "parser.hpp"
#include "question.hpp"
#include "scoring.hpp"
#include "stats.hpp"
#include "textdiff.hpp"
#include "unparse.hpp"
#include "value.hpp"
#include "verifier.hpp"
#include "version.hpp"
