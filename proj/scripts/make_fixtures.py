# Copyright 2026 The iclbias Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes the small synthetic extracts under data/.

These are shaped like the public Adult, Compas, Pima diabetes and thyroid
tables (column names, supports, rough marginals). They are not the real
datasets. Output is deterministic for a given --seed.
"""

import argparse
import json
import os

import numpy as np


def cat(name, support):
    return {"name": name, "kind": "categorical", "support": [str(s) for s in support]}


def num(name, lo, hi, integer=False):
    f = {"name": name, "kind": "numerical", "range": [lo, hi]}
    if integer:
        f["integer"] = True
    return f


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def compas(rng, n):
    race = rng.choice(["African-American", "Caucasian", "Hispanic", "Other"], n,
                      p=[0.51, 0.34, 0.09, 0.06])
    sex = rng.choice(["Male", "Female"], n, p=[0.81, 0.19])
    age = np.clip(18 + rng.gamma(2.2, 7.0, n), 18, 80).astype(int)
    aa = race == "African-American"
    young = age < 30
    juv = np.where(rng.random(n) < 0.04 + 0.04 * young, rng.integers(1, 5, n), 0)
    # Overdispersed priors, heavier for the African-American group.
    mean_priors = np.where(aa, 4.4, 2.6) * np.where(young, 0.7, 1.25)
    priors = np.clip(rng.negative_binomial(1.2, 1.2 / (1.2 + mean_priors)), 0, 38)
    charge = np.where(rng.random(n) < 0.64, "F", "M")
    z = (-1.25 + 0.2 * priors - 0.04 * (age - 34) + 0.35 * juv
         + 0.2 * (charge == "F") + 0.15 * (sex == "Male"))
    y = (rng.random(n) < sigmoid(z)).astype(int)
    cols = {"age": age, "sex": sex, "race": race, "juv_fel_count": juv,
            "priors_count": priors, "c_charge_degree": charge, "two_year_recid": y}
    schema = {
        "features": [num("age", 18, 80, True), cat("sex", ["Male", "Female"]),
                     cat("race", ["African-American", "Caucasian", "Hispanic", "Other"]),
                     num("juv_fel_count", 0, 10, True), num("priors_count", 0, 38, True),
                     cat("c_charge_degree", ["F", "M"])],
        "label": cat("two_year_recid", [0, 1]),
        "protected": "race",
    }
    return schema, cols


def adult(rng, n):
    gender = rng.choice(["Male", "Female"], n, p=[0.67, 0.33])
    marital = rng.choice(["Married-civ-spouse", "Never-married", "Divorced", "Widowed"], n,
                         p=[0.46, 0.33, 0.15, 0.06])
    country = rng.choice(["United-States", "Mexico", "Other"], n, p=[0.9, 0.03, 0.07])
    race = rng.choice(["White", "Black", "Asian-Pac-Islander", "Other"], n,
                      p=[0.85, 0.1, 0.03, 0.02])
    education = rng.choice(["Bachelors", "HS-grad", "Some-college", "Masters", "Assoc",
                            "Other"], n, p=[0.17, 0.32, 0.22, 0.06, 0.08, 0.15])
    workclass = rng.choice(["Private", "Self-emp", "Gov", "Other"], n,
                           p=[0.7, 0.11, 0.13, 0.06])
    age = np.clip(17 + rng.gamma(3.0, 7.0, n), 17, 90).astype(int)
    hours = np.clip(np.round(rng.normal(np.where(gender == "Male", 42, 36), 11)), 1, 99).astype(int)
    gain = np.where(rng.random(n) < 0.08, rng.integers(1000, 20000, n), 0)
    loss = np.where(rng.random(n) < 0.05, rng.integers(1000, 2500, n), 0)
    edu_w = {"Bachelors": 1.1, "Masters": 1.6, "HS-grad": -0.3, "Some-college": 0.0,
             "Assoc": 0.2, "Other": -0.9}
    z = (-2.3 + np.vectorize(edu_w.get)(education) + 1.3 * (marital == "Married-civ-spouse")
         + 0.03 * (np.minimum(age, 60) - 38) + 0.03 * (hours - 40) + 0.00012 * gain
         + 0.0006 * loss + 0.3 * (gender == "Male"))
    y = np.where(rng.random(n) < sigmoid(z), ">50K", "<=50K")
    cols = {"age": age, "workclass": workclass, "education": education,
            "marital-status": marital, "race": race, "gender": gender,
            "capital-gain": gain, "capital-loss": loss, "hours-per-week": hours,
            "native-country": country, "income": y}
    schema = {
        "features": [num("age", 17, 90, True),
                     cat("workclass", ["Private", "Self-emp", "Gov", "Other"]),
                     cat("education", ["Bachelors", "HS-grad", "Some-college", "Masters",
                                       "Assoc", "Other"]),
                     cat("marital-status", ["Married-civ-spouse", "Never-married", "Divorced",
                                            "Widowed"]),
                     cat("race", ["White", "Black", "Asian-Pac-Islander", "Other"]),
                     cat("gender", ["Male", "Female"]),
                     num("capital-gain", 0, 99999, True), num("capital-loss", 0, 4356, True),
                     num("hours-per-week", 1, 99, True),
                     cat("native-country", ["United-States", "Mexico", "Other"])],
        "label": cat("income", ["<=50K", ">50K"]),
        "protected": {"name": "gender_marital_country",
                      "features": ["gender", "marital-status", "native-country"]},
    }
    return schema, cols


def diabetes(rng, n):
    age = np.clip(21 + rng.gamma(1.6, 7.5, n), 21, 81).astype(int)
    preg = np.clip(rng.poisson(1 + 0.12 * (age - 21)), 0, 17)
    bmi = np.round(np.clip(rng.normal(32.0, 6.5, n), 18.0, 67.1), 1)
    glucose = np.clip(np.round(rng.normal(112 + 0.4 * (age - 30), 28)), 44, 199).astype(int)
    bp = np.clip(np.round(rng.normal(70 + 0.2 * (age - 30), 11)), 24, 122).astype(int)
    skin = np.clip(np.round(rng.normal(20 + 0.4 * (bmi - 32), 9)), 0, 99).astype(int)
    insulin = np.clip(np.round(rng.lognormal(4.5, 0.7, n)), 14, 846).astype(int)
    pedigree = np.round(np.clip(rng.lognormal(-0.85, 0.6, n), 0.078, 2.42), 3)
    z = (-7.0 + 0.035 * glucose + 0.08 * bmi + 0.9 * pedigree + 0.02 * age + 0.1 * preg)
    y = (rng.random(n) < sigmoid(z)).astype(int)
    cols = {"Pregnancies": preg, "Glucose": glucose, "BloodPressure": bp,
            "SkinThickness": skin, "Insulin": insulin, "BMI": bmi,
            "DiabetesPedigreeFunction": pedigree, "Age": age, "Outcome": y}
    schema = {
        "features": [num("Pregnancies", 0, 17, True), num("Glucose", 44, 199, True),
                     num("BloodPressure", 24, 122, True), num("SkinThickness", 0, 99, True),
                     num("Insulin", 14, 846, True), num("BMI", 18.0, 67.1),
                     num("DiabetesPedigreeFunction", 0.078, 2.42), num("Age", 21, 81, True)],
        "label": cat("Outcome", [0, 1]),
        "protected": "Age",
    }
    return schema, cols


def thyroid(rng, n):
    age = np.clip(np.round(rng.normal(48, 16, n)), 15, 90).astype(int)
    gender = rng.choice([0, 1], n, p=[0.7, 0.3])
    goiter = (rng.random(n) < 0.2).astype(int)
    family = (rng.random(n) < 0.25).astype(int)
    fatigue = (rng.random(n) < 0.35).astype(int)
    score = (0.03 * (age - 45) + 1.1 * goiter + 0.8 * family + 0.6 * fatigue
             + 0.3 * gender + rng.normal(0, 1, n))
    y = np.digitize(score, [0.4, 1.6])
    cols = {"Age": age, "Gender": gender, "Goiter": goiter, "Family_History": family,
            "Fatigue": fatigue, "label": y}
    schema = {
        "features": [num("Age", 15, 90, True), cat("Gender", [0, 1]), cat("Goiter", [0, 1]),
                     cat("Family_History", [0, 1]), cat("Fatigue", [0, 1])],
        "label": cat("label", [0, 1, 2]),
        "protected": "Age",
    }
    return schema, cols


def toy(rng, n):
    # Exactly one B per block of 10 rows, so any split at a multiple of 10
    # has a 10% unprivileged share.
    slot = np.concatenate([rng.permutation(10) for _ in range((n + 9) // 10)])[:n]
    group = np.where(slot == 0, "B", "A")
    x = np.round(rng.normal(0, 1, n), 4)
    tier = rng.choice(["low", "mid", "high"], n, p=[0.3, 0.4, 0.3])
    z = 0.9 * x + 0.6 * (tier == "high") - 0.6 * (tier == "low") - 0.3 * (group == "B")
    y = (rng.random(n) < sigmoid(z)).astype(int)
    cols = {"group": group, "x": x, "tier": tier, "y": y}
    schema = {
        "features": [cat("group", ["A", "B"]), num("x", -6.0, 6.0),
                     cat("tier", ["low", "mid", "high"])],
        "label": cat("y", [0, 1]),
        "protected": "group",
    }
    return schema, cols


def fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write(out_dir, name, schema, cols, n_train):
    with open(os.path.join(out_dir, name + ".schema.json"), "w") as f:
        json.dump(schema, f, indent=2)
        f.write("\n")
    header = [f["name"] for f in schema["features"]] + [schema["label"]["name"]]
    n = len(cols[header[0]])
    for part, rows in (("train", range(0, n_train)), ("test", range(n_train, n))):
        with open(os.path.join(out_dir, f"{name}_{part}.csv"), "w") as f:
            f.write(",".join(header) + "\n")
            for i in rows:
                f.write(",".join(fmt(cols[h][i]) for h in header) + "\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data"))
    ap.add_argument("--seed", type=int, default=20260101)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    sizes = {"compas": (2000, 1000), "adult": (2000, 1000), "diabetes": (1000, 500),
             "thyroid": (1000, 500), "toy": (2000, 1000)}
    builders = {"compas": compas, "adult": adult, "diabetes": diabetes,
                "thyroid": thyroid, "toy": toy}
    for i, (name, build) in enumerate(builders.items()):
        rng = np.random.default_rng([args.seed, i])
        n_train, n_test = sizes[name]
        schema, cols = build(rng, n_train + n_test)
        write(args.out, name, schema, cols, n_train)


if __name__ == "__main__":
    main()
