#pragma once

#include <string>

#include "corpus.hpp"

namespace fixtures {

// "You must not drive because it is dangerous" with scope {You, drive}.
inline const char* kDrive =
    "# sent_id = drive\n"
    "# lang = en\n"
    "1\tYou\tyou\tPRON\t4\tnsubj\t_\tS\n"
    "2\tmust\tmust\tAUX\t4\taux\t_\t_\n"
    "3\tnot\tnot\tPART\t4\tneg\tC\t_\n"
    "4\tdrive\tdrive\tVERB\t0\troot\t_\tS\n"
    "5\tbecause\tbecause\tSCONJ\t8\tmark\t_\t_\n"
    "6\tit\tit\tPRON\t8\tnsubj\t_\t_\n"
    "7\tis\tbe\tAUX\t8\tcop\t_\t_\n"
    "8\tdangerous\tdangerous\tADJ\t4\tadvcl\t_\t_\n";

// "She is not a princess", said the queen .
inline const char* kPrincess =
    "# sent_id = princess\n"
    "1\t\"\t\"\tPUNCT\t6\tpunct\t_\t_\n"
    "2\tShe\tshe\tPRON\t6\tnsubj\t_\tS\n"
    "3\tis\tbe\tAUX\t6\tcop\t_\tS\n"
    "4\tnot\tnot\tPART\t6\tneg\tC\t_\n"
    "5\ta\ta\tDET\t6\tdet\t_\tS\n"
    "6\tprincess\tprincess\tNOUN\t9\tccomp\t_\tS\n"
    "7\t\"\t\"\tPUNCT\t6\tpunct\t_\t_\n"
    "8\t,\t,\tPUNCT\t9\tpunct\t_\t_\n"
    "9\tsaid\tsay\tVERB\t0\troot\t_\t_\n"
    "10\tthe\tthe\tDET\t11\tdet\t_\t_\n"
    "11\tqueen\tqueen\tNOUN\t9\tnsubj\t_\t_\n"
    "12\t.\t.\tPUNCT\t9\tpunct\t_\t_\n";

// I eat pizza but do not drink beer .
inline const char* kPizza =
    "# sent_id = pizza\n"
    "1\tI\tI\tPRON\t2\tnsubj\t_\tS\n"
    "2\teat\teat\tVERB\t0\troot\t_\t_\n"
    "3\tpizza\tpizza\tNOUN\t2\tobj\t_\t_\n"
    "4\tbut\tbut\tCCONJ\t7\tcc\t_\t_\n"
    "5\tdo\tdo\tAUX\t7\taux\t_\tS\n"
    "6\tnot\tnot\tPART\t7\tneg\tC\t_\n"
    "7\tdrink\tdrink\tVERB\t2\tconj\t_\tS\n"
    "8\tbeer\tbeer\tNOUN\t7\tobj\t_\tS\n"
    "9\t.\t.\tPUNCT\t2\tpunct\t_\t_\n";

inline negscope::Corpus parse(const std::string& text) {
  return negscope::parse_corpus_text(text, "fixture");
}

}  // namespace fixtures
