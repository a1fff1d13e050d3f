//! Browser bindings: normal words, conformal products and envelope completion.
//!
//! Every function takes the text of a presentation file and returns plain
//! text. Errors come back as a single line starting with `error:`.

use gsb_core::conformal::enumerate_normal_words;
use gsb_core::io::{parse, parse_polynomial, run, Overrides, ProductQuery, Task};
use gsb_core::Result;
use wasm_bindgen::prelude::*;

fn or_error(r: Result<String>) -> String {
    r.unwrap_or_else(|e| format!("error: {e}"))
}

/// Normal words of the free conformal algebra of the file's locality, up to `bound` letters.
#[wasm_bindgen]
pub fn normal_words(source: &str, bound: usize) -> String {
    or_error((|| {
        let file = parse(source)?;
        let loc = file
            .locality
            .clone()
            .ok_or_else(|| gsb_core::Error::Parse {
                line: 0,
                column: 0,
                message: "a [locality] section is required".into(),
            })?;
        let spec = file.spec();
        let words = enumerate_normal_words(&spec, &loc, bound);
        let mut out = format!("{} normal words up to length {bound}\n", words.len());
        for w in &words {
            out.push_str(&spec.render(w));
            out.push('\n');
        }
        Ok(out)
    })())
}

/// `x ∘_n y`, with `x` and `y` written in word syntax such as `L{0}[a] b`.
#[wasm_bindgen]
pub fn conformal_product(source: &str, x: &str, n: u32, y: &str) -> String {
    or_error((|| {
        let mut file = parse(source)?;
        let alphabet = file.alphabet();
        file.product = Some(ProductQuery {
            x: parse_polynomial(x, &alphabet, 1, 1)?,
            n,
            y: parse_polynomial(y, &alphabet, 1, 1)?,
        });
        Ok(run(&file, Some(Task::Product), Overrides::default())?
            .lines
            .join("\n"))
    })())
}

/// Completes the universal envelope of the file's bracket and reports speciality.
#[wasm_bindgen]
pub fn envelope_completion(source: &str) -> String {
    or_error((|| {
        Ok(
            run(&parse(source)?, Some(Task::Envelope), Overrides::default())?
                .lines
                .join("\n"),
        )
    })())
}
