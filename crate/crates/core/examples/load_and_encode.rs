//! Loads a table from JSON and prints the encodings the prompts use.
//!
//! cargo run --example load_and_encode

use tabreason::eval::metrics::bucket;
use tabreason::table::{encode_pipe, encode_sql_schema, parse_pipe, token_estimate, RawTable, Table};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/golden/table.json");
    let raw: RawTable = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let table = Table::load(&raw)?;
    println!("{} rows x {} columns = {} cells", table.num_rows(), table.num_columns(), table.cell_count());

    let pipe = encode_pipe(&table);
    let tokens = token_estimate(&pipe);
    println!("pipe encoding: ~{tokens} tokens, {} table", bucket(tokens).as_str());

    let schema = encode_sql_schema(&table, 200);
    println!("\nschema encoding within 200 tokens ({} of {} rows):", schema.rows_included, schema.rows_total);
    println!("{}", schema.text);

    println!("\ntransposed, first lines:");
    for line in encode_pipe(&table.transpose()).lines().take(5) {
        println!("{line}");
    }

    let back = parse_pipe(&pipe)?;
    assert_eq!(back.columns, table.columns());
    println!("\npipe encoding parses back to {} rows", back.rows.len());
    Ok(())
}
