#pragma once

#include <string>
#include <vector>

// Vocabulary shared by the synthetic note generator and the built-in
// lexicons. The allowlist must keep covering every capitalized
// sentence-initial and label word the note templates emit.

namespace reidaudit::gen_vocab {

inline const std::vector<std::string> kFirstNames = {
    "JOHN",  "MARY",   "ROBERT", "LINDA",  "MICHAEL", "SUSAN",
    "DAVID", "KAREN",  "JAMES",  "NANCY",  "WILLIAM", "BETTY",
    "MARK",  "HELEN",  "PAUL",   "RUTH",   "GEORGE",  "ALICE",
    "FRANK", "MARTHA", "HENRY",  "GLORIA", "CARL",    "IRENE"};

inline const std::vector<std::string> kLastNames = {
    "SMITH",  "JOHNSON",  "WILLIAMS", "BROWN",  "JONES",  "GARCIA",
    "MILLER", "DAVIS",    "WILSON",   "MOORE",  "TAYLOR", "ANDERSON",
    "THOMAS", "JACKSON",  "WHITE",    "HARRIS", "MARTIN", "THOMPSON",
    "LOPEZ",  "CLARK",    "LEWIS",    "WALKER", "HALL",   "YOUNG"};

inline const std::vector<std::string> kAllowlistTerms = {
    // filler sentence-initial words
    "patient", "denies", "lungs", "cardiac", "continue", "blood", "mild",
    "echocardiogram", "labs", "sodium", "no", "follow", "medication",
    "symptoms", "renal", "plan", "telemetry", "orthopnea", "appetite",
    "wound", "gait", "chest",
    // field-line labels and sentence starters
    "encounter", "visit", "note", "mrn", "medical", "gender", "sex", "dob",
    "date", "race", "ethnicity", "deceased", "death", "time", "address",
    "resides", "city", "lives", "state", "zip", "postal", "secondary",
    "listed",
    // contact/name/prose lines
    "contact", "office", "fax", "seen", "reviewed", "dr", "the",
    // generic clinical vocabulary
    "exam", "history", "normal", "stable", "heart", "pressure"};

}  // namespace reidaudit::gen_vocab
