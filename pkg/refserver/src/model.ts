/**
 * Linear regressor behind the server: loads the engine's JSON model
 * artifact and supports refitting by ordinary least squares.
 */

import { readFileSync } from "fs";

export interface LinearModel {
  intercept: number;
  coef: number[];
}

export function loadModel(path: string): LinearModel {
  let payload: any;
  try {
    payload = JSON.parse(readFileSync(path, "utf-8"));
  } catch (err) {
    throw new Error(`cannot read model artifact ${path}: ${(err as Error).message}`);
  }
  if (payload.format !== "geoshap-model" || payload.version !== 1) {
    throw new Error(`${path} is not a version-1 geoshap-model artifact`);
  }
  if (payload.kind !== "linear") {
    throw new Error(`reference server only wraps 'linear' models, got '${payload.kind}'`);
  }
  const params = payload.params;
  if (typeof params?.intercept !== "number" || !Array.isArray(params?.coef)) {
    throw new Error(`${path} has malformed linear parameters`);
  }
  return { intercept: params.intercept, coef: params.coef.map(Number) };
}

export function predict(model: LinearModel, rows: number[][]): number[] {
  const d = model.coef.length;
  return rows.map((row) => {
    if (!Array.isArray(row) || row.length !== d) {
      throw new Error(`row has ${row?.length} columns, model expects ${d}`);
    }
    let acc = model.intercept;
    for (let j = 0; j < d; j++) acc += model.coef[j] * row[j];
    return acc;
  });
}

/** OLS with intercept via normal equations (partial-pivot elimination). */
export function fit(rows: number[][], targets: number[], d: number): LinearModel {
  const n = rows.length;
  if (n !== targets.length) {
    throw new Error(`${n} rows vs ${targets.length} targets`);
  }
  if (n < d + 1) {
    throw new Error(`need at least ${d + 1} rows to fit ${d} coefficients`);
  }
  const k = d + 1; // intercept column first
  const ata: number[][] = Array.from({ length: k }, () => new Array(k).fill(0));
  const aty = new Array(k).fill(0);
  for (let i = 0; i < n; i++) {
    const row = [1, ...rows[i]];
    if (row.length !== k) throw new Error(`row has ${rows[i].length} columns, expected ${d}`);
    for (let a = 0; a < k; a++) {
      aty[a] += row[a] * targets[i];
      for (let b = 0; b < k; b++) ata[a][b] += row[a] * row[b];
    }
  }
  const beta = solve(ata, aty);
  return { intercept: beta[0], coef: beta.slice(1) };
}

function solve(a: number[][], b: number[]): number[] {
  const k = b.length;
  const m = a.map((row, i) => [...row, b[i]]);
  for (let col = 0; col < k; col++) {
    let pivot = col;
    for (let r = col + 1; r < k; r++) {
      if (Math.abs(m[r][col]) > Math.abs(m[pivot][col])) pivot = r;
    }
    if (Math.abs(m[pivot][col]) < 1e-12) {
      throw new Error("normal equations are singular; fit needs independent columns");
    }
    [m[col], m[pivot]] = [m[pivot], m[col]];
    for (let r = 0; r < k; r++) {
      if (r === col) continue;
      const factor = m[r][col] / m[col][col];
      for (let c = col; c <= k; c++) m[r][c] -= factor * m[col][c];
    }
  }
  return m.map((row, i) => row[k] / row[i]);
}
