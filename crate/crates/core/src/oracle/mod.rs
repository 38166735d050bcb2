//! Independent ground truth: brute-force search, enumeration of small
//! algebras and relations, instance generation and the lemma suite.

pub mod brute;
pub mod enumerate;
pub mod generate;
pub mod lemmas;
